#include "cidg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cidg/random.hpp"

namespace cidg {

double median_bandwidth(const Matrix& features, std::uint64_t seed, Index max_points) {
  const Index n = features.rows();
  if (n < 2) throw Error("median bandwidth needs at least two points");

  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (n > max_points) {
    Rng rng(seed);
    rng.shuffle(rows);
    rows.resize(static_cast<std::size_t>(max_points));
    std::sort(rows.begin(), rows.end());
  }

  std::vector<double> distances;
  distances.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      distances.push_back((features.row(rows[i]) - features.row(rows[j])).norm());
    }
  }
  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid), distances.end());
  double median = distances[mid];
  if (distances.size() % 2 == 0) {
    const double lower = *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) {
    throw Error("median pairwise distance is zero; set an explicit kernel bandwidth");
  }
  return median;
}

KernelSpec resolve(const KernelSpec& spec, const Matrix& features, std::uint64_t seed) {
  if (spec.resolved()) return spec;
  KernelSpec out = spec;
  out.bandwidth = spec.median_scale * median_bandwidth(features, seed);
  return out;
}

Matrix gram(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  if (a.cols() != b.cols()) {
    throw Error("kernel inputs have " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()) +
                " feature columns");
  }
  if (spec.family == KernelSpec::Family::linear) return a * b.transpose();
  if (!spec.bandwidth || !(*spec.bandwidth > 0.0)) throw Error("RBF kernel needs a positive bandwidth");

  const double scale = -1.0 / (2.0 * *spec.bandwidth * *spec.bandwidth);
  Matrix k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(scale * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return k;
}

Matrix center_train(const Matrix& k) {
  if (k.rows() != k.cols()) throw Error("training kernel must be square");
  const Vector row_means = k.rowwise().mean();
  const Eigen::RowVectorXd col_means = k.colwise().mean();
  const double grand = k.mean();
  Matrix out = k;
  out.colwise() -= row_means;
  out.rowwise() -= col_means;
  out.array() += grand;
  return out;
}

TrainKernelStats TrainKernelStats::of(const Matrix& k) {
  return {k.rowwise().mean(), k.mean()};
}

Matrix center_cross(const Matrix& k_cross, const TrainKernelStats& train, CrossCentering mode) {
  if (k_cross.rows() != train.row_means.size()) {
    throw Error("cross kernel has " + std::to_string(k_cross.rows()) + " rows but the training kernel has " +
                std::to_string(train.row_means.size()));
  }
  if (k_cross.cols() == 0) return k_cross;
  const Eigen::RowVectorXd col_means = k_cross.colwise().mean();
  Matrix out = k_cross;
  out.rowwise() -= col_means;
  if (mode == CrossCentering::paper) {
    out.colwise() -= k_cross.rowwise().mean();
    out.array() += k_cross.mean();
  } else {
    out.colwise() -= train.row_means;
    out.array() += train.grand_mean;
  }
  return out;
}

Matrix center_cross(const Matrix& k_cross, const Matrix& k_train, CrossCentering mode) {
  if (k_train.rows() != k_train.cols()) throw Error("training kernel must be square");
  return center_cross(k_cross, TrainKernelStats::of(k_train), mode);
}

}  // namespace cidg
