#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cidg/kernel.hpp"
#include "cidg/scatter.hpp"
#include "cidg/types.hpp"

namespace cidg {

struct SolverConfig {
  double gamma = 1.0;  // weight of the conditional scatter H
  double alpha = 1.0;  // weight of the prior-normalized scatter L
  /// Ridge added to the denominator. When `relative_epsilon` is set it is
  /// multiplied by the mean diagonal of Q (falling back to 1 if that is 0).
  double epsilon = 1e-5;
  bool relative_epsilon = true;
  /// Number of directions kept; unset keeps every admissible one.
  std::optional<Index> q;
  /// Eigenvalues at or below this fraction of the largest are dropped.
  double eig_tolerance = 1e-10;

  void validate() const;
};

/// Fitted transformation from input features to q learned coordinates.
///
/// A kernel model maps x to B^T k~(x) / sqrt(Gamma), where k~(x) is the
/// centered vector of kernel values against the training features. An
/// identity model passes features through unchanged and exists so the raw
/// KNN baseline can share the projection and export paths.
struct ProjectionModel {
  enum class Kind { kernel, identity };

  Kind kind = Kind::kernel;
  Matrix coefficients;  // B, n x q, columns D-orthonormal
  Vector eigenvalues;   // descending, positive
  KernelSpec kernel;    // resolved
  Matrix training_features;
  TrainKernelStats train_stats;  // for standard cross centering
  double epsilon = 0.0;          // absolute ridge used by the solve
  std::vector<std::string> warnings;

  Index dims() const {
    return kind == Kind::identity ? training_features.cols() : coefficients.cols();
  }
  Index input_dimension() const { return training_features.cols(); }

  static ProjectionModel identity(Index dimension);
};

/// Denominator D = gamma H + alpha L + Q + eps I for a resolved epsilon.
Matrix denominator(const ScatterSet& scatters, double gamma, double alpha, double epsilon);

/// Absolute ridge for `config` given the within-class scatter.
double effective_epsilon(const SolverConfig& config, const Matrix& within);

/// Leading eigenpairs of the symmetric-definite pencil (P, D).
///
/// D is Cholesky-factored as L L^T and the standard symmetric problem
/// L^{-1} P L^{-T} v = lambda v is solved; b = L^{-T} v, so B^T D B = I.
/// Columns are ordered by descending eigenvalue and signed so that their
/// largest-magnitude entry is positive. Only the coefficient and eigenvalue
/// fields of the result are filled.
ProjectionModel solve(const ScatterSet& scatters, const SolverConfig& config);

/// Lower-level form used by solve() and the baselines: top eigenpairs of
/// (numerator, denominator) after tolerance truncation.
ProjectionModel solve_pencil(const Matrix& numerator, const Matrix& denom, const SolverConfig& config);

/// Learned coordinates of `features` (one row per sample).
Matrix project(const ProjectionModel& model, const Matrix& features,
               CrossCentering mode = CrossCentering::paper);

/// Learned coordinates of the training samples, (K~)^T B Gamma^{-1/2}.
Matrix project_training(const ProjectionModel& model, const Matrix& centered_k);

/// Versioned little-endian binary model file; layout in docs/formats.md.
void save_model(const ProjectionModel& model, const std::filesystem::path& path);
ProjectionModel load_model(const std::filesystem::path& path);

}  // namespace cidg
