#include "cidg/scatter.hpp"

namespace cidg {

namespace {

Vector indicator(Index n, const std::vector<Index>& rows, double value) {
  Vector v = Vector::Zero(n);
  for (Index r : rows) v(r) = value;
  return v;
}

void check_size(const Matrix& k, const WeightSet& w) {
  if (k.rows() != k.cols()) throw Error("kernel matrix must be square");
  if (k.rows() != w.size()) {
    throw Error("kernel is " + std::to_string(k.rows()) + " x " + std::to_string(k.cols()) +
                " but the weights cover " + std::to_string(w.size()) + " samples");
  }
}

// sum_c scale_c (K d_c)(K d_c)^T for the columns d_c of `directions`.
Matrix sandwich(const Matrix& k, const Matrix& directions, const Vector& scales) {
  Matrix kd = k * directions;
  kd *= scales.cwiseSqrt().asDiagonal();
  Matrix s = kd * kd.transpose();
  return 0.5 * (s + s.transpose());
}

}  // namespace

WeightSet build_weights(const GroupIndex& groups, MissingClassPolicy policy) {
  if (groups.total == 0) throw Error("cannot build weights for an empty dataset");
  const Index n = groups.total;

  WeightSet w;
  w.domain_ids = groups.domain_ids;
  w.class_ids = groups.class_ids;
  w.uniform = Vector::Constant(n, 1.0 / static_cast<double>(n));

  for (int s : groups.domain_ids) {
    for (int j : groups.class_ids) {
      const auto it = groups.index_of.find({s, j});
      if (it == groups.index_of.end()) {
        if (policy == MissingClassPolicy::strict) {
          throw Error("class " + std::to_string(j) + " has no samples in domain " + std::to_string(s) +
                      "; use lenient grouping to average over the domains that contain it");
        }
        w.adjustments.push_back("class " + std::to_string(j) + " absent from domain " + std::to_string(s));
        continue;
      }
      const auto& rows = it->second;
      w.class_domain[{s, j}] = indicator(n, rows, 1.0 / static_cast<double>(rows.size()));
    }
  }

  for (int j : groups.class_ids) {
    Vector mean = Vector::Zero(n);
    int present = 0;
    for (int s : groups.domain_ids) {
      if (auto it = w.class_domain.find({s, j}); it != w.class_domain.end()) {
        mean += it->second;
        ++present;
      }
    }
    w.class_mean[j] = mean / static_cast<double>(present);

    std::vector<Index> rows;
    for (int s : groups.domain_ids) {
      if (auto it = groups.index_of.find({s, j}); it != groups.index_of.end()) {
        rows.insert(rows.end(), it->second.begin(), it->second.end());
      }
    }
    const auto n_j = static_cast<double>(rows.size());
    w.class_total[j] = indicator(n, rows, 1.0 / n_j);
    w.class_size[j] = n_j;
  }

  w.prior_mean = Vector::Zero(n);
  for (int s : groups.domain_ids) {
    std::vector<int> present;
    for (int j : groups.class_ids) {
      if (w.class_domain.count({s, j}) != 0) present.push_back(j);
    }
    // Entries are 1 / (C * n_j^s) in one division, so balanced cells give
    // exactly 1 / n^s.
    Vector ws = Vector::Zero(n);
    std::vector<Index> rows;
    for (int j : present) {
      const auto& cell = groups.index_of.at({s, j});
      const double value = 1.0 / (static_cast<double>(present.size()) * static_cast<double>(cell.size()));
      for (Index r : cell) ws(r) = value;
      rows.insert(rows.end(), cell.begin(), cell.end());
    }
    w.prior_mean += ws;
    w.prior_normalized[s] = std::move(ws);
    w.domain_uniform[s] = indicator(n, rows, 1.0 / static_cast<double>(rows.size()));
  }
  w.prior_mean /= static_cast<double>(groups.domain_ids.size());
  return w;
}

Matrix conditional_scatter(const Matrix& k, const WeightSet& w) {
  check_size(k, w);
  Matrix diffs(w.size(), static_cast<Index>(w.class_domain.size()));
  Index col = 0;
  for (const auto& [key, a] : w.class_domain) diffs.col(col++) = a - w.class_mean.at(key.label);
  const Vector scales = Vector::Constant(diffs.cols(), 1.0 / w.num_domains());
  return sandwich(k, diffs, scales);
}

namespace {

Matrix domain_scatter(const Matrix& k, const WeightSet& w, const std::map<int, Vector>& per_domain) {
  check_size(k, w);
  Vector mean = Vector::Zero(w.size());
  for (const auto& [s, v] : per_domain) mean += v;
  mean /= static_cast<double>(per_domain.size());
  Matrix diffs(w.size(), static_cast<Index>(per_domain.size()));
  Index col = 0;
  for (const auto& [s, v] : per_domain) diffs.col(col++) = mean - v;
  const Vector scales = Vector::Constant(diffs.cols(), 1.0 / static_cast<double>(per_domain.size()));
  return sandwich(k, diffs, scales);
}

}  // namespace

Matrix prior_scatter(const Matrix& k, const WeightSet& w) {
  return domain_scatter(k, w, w.prior_normalized);
}

Matrix marginal_scatter(const Matrix& k, const WeightSet& w) {
  return domain_scatter(k, w, w.domain_uniform);
}

Matrix between_scatter(const Matrix& k, const WeightSet& w) {
  check_size(k, w);
  Matrix diffs(w.size(), static_cast<Index>(w.class_total.size()));
  Vector scales(diffs.cols());
  Index col = 0;
  for (const auto& [j, c] : w.class_total) {
    scales(col) = w.class_size.at(j);
    diffs.col(col++) = c - w.uniform;
  }
  return sandwich(k, diffs, scales);
}

Matrix within_scatter(const Matrix& k, const WeightSet& w) {
  check_size(k, w);
  // M is the projector that removes class means, so K M K = (K M)(K M)^T.
  Matrix km = k;
  for (const auto& [j, c] : w.class_total) km -= (k * c) * (w.class_size.at(j) * c).transpose();
  Matrix q = km * km.transpose();
  return 0.5 * (q + q.transpose());
}

ScatterSet build_scatters(const Matrix& centered_k, const WeightSet& w) {
  return {conditional_scatter(centered_k, w), prior_scatter(centered_k, w), between_scatter(centered_k, w),
          within_scatter(centered_k, w)};
}

}  // namespace cidg
