#include "cidg/solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace cidg {

void SolverConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error("gamma must be finite and >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("alpha must be finite and >= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error("epsilon must be finite and > 0");
  if (q && *q < 1) throw Error("q must be >= 1");
  if (!(eig_tolerance > 0.0)) throw Error("eigenvalue tolerance must be > 0");
}

ProjectionModel ProjectionModel::identity(Index dimension) {
  ProjectionModel model;
  model.kind = Kind::identity;
  model.training_features.resize(0, dimension);
  return model;
}

Matrix denominator(const ScatterSet& scatters, double gamma, double alpha, double epsilon) {
  const Index n = scatters.size();
  for (const Matrix* m : {&scatters.conditional, &scatters.prior, &scatters.within}) {
    if (m->rows() != n || m->cols() != n) throw Error("scatter matrices have inconsistent sizes");
  }
  Matrix d = scatters.within;
  if (gamma != 0.0) d += gamma * scatters.conditional;
  if (alpha != 0.0) d += alpha * scatters.prior;
  d.diagonal().array() += epsilon;
  return d;
}

double effective_epsilon(const SolverConfig& config, const Matrix& within) {
  if (!config.relative_epsilon || within.rows() == 0) return config.epsilon;
  const double mean_diag = within.diagonal().mean();
  return mean_diag > 0.0 ? config.epsilon * mean_diag : config.epsilon;
}

ProjectionModel solve_pencil(const Matrix& numerator, const Matrix& denom, const SolverConfig& config) {
  config.validate();
  const Index n = numerator.rows();
  if (numerator.cols() != n || denom.rows() != n || denom.cols() != n) {
    throw Error("pencil matrices must be square and of equal size");
  }
  if (config.q && *config.q > n) {
    throw Error("q = " + std::to_string(*config.q) + " exceeds the number of training samples " +
                std::to_string(n));
  }
  if (!numerator.allFinite() || !denom.allFinite()) throw Error("pencil matrices contain non-finite values");

  const Eigen::LLT<Matrix> llt(denom);
  if (llt.info() != Eigen::Success) throw Error("denominator matrix is not positive definite");
  const auto lower = llt.matrixL();

  // A = L^{-1} P L^{-T}
  Matrix a = lower.solve(numerator);
  a = lower.solve(a.transpose()).eval();
  a = 0.5 * (a + a.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");

  // Rounding in forming A perturbs its spectrum by roughly u |P| |D^{-1}|;
  // eigenvalues below that floor carry no direction information.
  const Matrix inv_lower = lower.solve(Matrix::Identity(n, n));
  const double noise = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * numerator.norm() *
                       inv_lower.squaredNorm();

  const Vector& values = eig.eigenvalues();  // ascending
  const double largest = values(n - 1);
  const double floor = std::max(config.eig_tolerance * largest, noise);
  Index admissible = 0;
  if (largest > 0.0) {
    while (admissible < n && values(n - 1 - admissible) > floor) ++admissible;
  }
  if (admissible == 0) throw Error("the numerator scatter has no positive eigenvalues");

  ProjectionModel model;
  Index keep = admissible;
  if (config.q) {
    keep = std::min(*config.q, admissible);
    if (*config.q > admissible) {
      model.warnings.push_back("q truncated from " + std::to_string(*config.q) + " to " +
                               std::to_string(admissible) + " positive eigenvalues");
    }
  }

  Matrix v(n, keep);
  model.eigenvalues.resize(keep);
  for (Index c = 0; c < keep; ++c) {
    v.col(c) = eig.eigenvectors().col(n - 1 - c);
    model.eigenvalues(c) = values(n - 1 - c);
  }
  // b = L^{-T} v
  model.coefficients = lower.transpose().solve(v);

  for (Index c = 0; c < keep; ++c) {
    Index pivot = 0;
    model.coefficients.col(c).cwiseAbs().maxCoeff(&pivot);
    if (model.coefficients(pivot, c) < 0.0) model.coefficients.col(c) *= -1.0;
  }
  return model;
}

ProjectionModel solve(const ScatterSet& scatters, const SolverConfig& config) {
  config.validate();
  const double eps = effective_epsilon(config, scatters.within);
  ProjectionModel model =
      solve_pencil(scatters.between, denominator(scatters, config.gamma, config.alpha, eps), config);
  model.epsilon = eps;
  return model;
}

Matrix project_training(const ProjectionModel& model, const Matrix& centered_k) {
  if (centered_k.rows() != model.coefficients.rows()) {
    throw Error("training kernel does not match the model's coefficient rows");
  }
  const Vector inv_sqrt = model.eigenvalues.array().rsqrt();
  return centered_k.transpose() * model.coefficients * inv_sqrt.asDiagonal();
}

Matrix project(const ProjectionModel& model, const Matrix& features, CrossCentering mode) {
  if (features.cols() != model.input_dimension()) {
    throw Error("features have " + std::to_string(features.cols()) + " columns but the model expects " +
                std::to_string(model.input_dimension()));
  }
  if (model.kind == ProjectionModel::Kind::identity) return features;
  if ((model.eigenvalues.array() <= 0.0).any()) throw Error("model has a non-positive eigenvalue");

  const Matrix k_cross = gram(model.training_features, features, model.kernel);
  const Matrix centered = center_cross(k_cross, model.train_stats, mode);
  const Vector inv_sqrt = model.eigenvalues.array().rsqrt();
  return centered.transpose() * model.coefficients * inv_sqrt.asDiagonal();
}

}  // namespace cidg
