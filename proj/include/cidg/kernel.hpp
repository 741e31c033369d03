#pragma once

#include <cstdint>
#include <optional>

#include "cidg/types.hpp"

namespace cidg {

/// RBF kernel k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)).
///
/// With no explicit bandwidth the median pairwise distance of the training
/// features is used, multiplied by `median_scale`. The linear kernel
/// k(x, x') = <x, x'> exists for oracle tests and is not accepted in
/// configuration files.
struct KernelSpec {
  enum class Family { rbf, linear };

  Family family = Family::rbf;
  std::optional<double> bandwidth;
  double median_scale = 1.0;

  static KernelSpec rbf(double sigma) { return {Family::rbf, sigma, 1.0}; }
  static KernelSpec median(double scale = 1.0) { return {Family::rbf, std::nullopt, scale}; }
  static KernelSpec linear() { return {Family::linear, std::nullopt, 1.0}; }

  bool resolved() const { return family == Family::linear || bandwidth.has_value(); }
  bool operator==(const KernelSpec&) const = default;
};

/// Median of pairwise Euclidean distances. Above `max_points` rows a
/// seeded subsample of that size is used. Throws when the median is zero.
double median_bandwidth(const Matrix& features, std::uint64_t seed = 0, Index max_points = 1000);

/// Fills in the bandwidth of a median-heuristic spec from `features`.
KernelSpec resolve(const KernelSpec& spec, const Matrix& features, std::uint64_t seed = 0);

/// Entry (i, j) = k(a_i, b_j). `spec` must be resolved.
Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& spec);

/// K - 1_n K - K 1_n + 1_n K 1_n, with 1_n the n x n matrix of 1/n.
Matrix center_train(const Matrix& k);

/// How a train-by-test kernel is centered.
///
/// `paper`: K_t - 1_n K_t - K_t 1_t + 1_n K_t 1_t, using only the cross
/// kernel; 1_t is the n_t x n_t matrix of 1/n_t, so each column is centered
/// over training rows and each row over the test batch. Projections then
/// depend on the whole test batch.
///
/// `standard`: (I - 1_n)(K_t - K 1_{n x n_t}), the usual out-of-sample
/// centering against the training feature mean, with 1_{n x n_t} of 1/n.
/// It only needs the row means and grand mean of the uncentered training
/// kernel, and each test column is treated independently.
enum class CrossCentering { paper, standard };

/// Summary of the uncentered training kernel needed by standard centering.
struct TrainKernelStats {
  Vector row_means;
  double grand_mean = 0.0;

  static TrainKernelStats of(const Matrix& k);
};

Matrix center_cross(const Matrix& k_cross, const TrainKernelStats& train, CrossCentering mode);
Matrix center_cross(const Matrix& k_cross, const Matrix& k_train, CrossCentering mode);

}  // namespace cidg
