#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cidg/dataset.hpp"
#include "cidg/kernel.hpp"
#include "cidg/solver.hpp"

namespace cidg {

/// Euclidean k-nearest-neighbour majority vote.
///
/// Neighbours are the k smallest (distance, training row) pairs. A tied vote
/// goes to the class with the smallest summed neighbour distance, then to
/// the smallest class id.
std::vector<int> knn_predict(const Matrix& train_features, const std::vector<int>& train_labels,
                             const Matrix& test_features, Index k);

/// Fraction of positions where `predicted` equals `truth`.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

enum class MethodTag { raw_knn, kpca, dica_marginal, kfda, cidg };

std::string to_string(MethodTag tag);
MethodTag method_from_string(const std::string& name);

/// A feature learner followed by KNN.
///
///   raw_knn        identity features
///   kpca           leading eigenvectors of the centered kernel
///   dica_marginal  P against alpha * L_marginal + Q + eps I, where
///                  L_marginal is the domain scatter of per-domain uniform
///                  weights (marginal rather than conditional invariance)
///   kfda           P against Q + eps I
///   cidg           P against gamma H + alpha L + Q + eps I
struct Method {
  MethodTag tag = MethodTag::cidg;
  std::optional<Index> q;  // unset: min(n - 1, C * m)
  double gamma = 1.0;
  double alpha = 1.0;
  double epsilon = 1e-5;
  bool relative_epsilon = true;
  MissingClassPolicy missing_classes = MissingClassPolicy::strict;

  SolverConfig solver_config() const;
};

/// Kernel-side quantities shared by every method fitted on one training set
/// with one kernel; built once and reused across a hyperparameter grid.
struct KernelFit {
  KernelSpec kernel;  // resolved
  Matrix features;
  Matrix centered;  // center_train(gram(features, features))
  TrainKernelStats stats;
  WeightSet weights;
  ScatterSet scatters;
  Matrix marginal;  // marginal_scatter(centered, weights)
  std::vector<int> labels;

  static KernelFit build(const LabeledDataset& train, const KernelSpec& spec,
                         MissingClassPolicy policy = MissingClassPolicy::strict);
};

/// Fits `method` on prepared kernel quantities.
ProjectionModel fit_method(const Method& method, const KernelFit& prepared);

/// Fits `method` on `train`; the kernel bandwidth is resolved on `train`.
ProjectionModel fit_baseline(const Method& method, const LabeledDataset& train, const KernelSpec& spec);

}  // namespace cidg
