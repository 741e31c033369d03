#pragma once

#include <map>
#include <string>
#include <vector>

#include "cidg/dataset.hpp"
#include "cidg/types.hpp"

namespace cidg {

/// What to do when a class is missing from some training domain.
enum class MissingClassPolicy {
  strict,   // reject
  lenient,  // average only over the domains (classes) that are present
};

/// Weight vectors over the n training samples. Each mean embedding in the
/// RKHS is Phi^T w for one of these, so K w is its image under the kernel.
struct WeightSet {
  std::vector<int> domain_ids;
  std::vector<int> class_ids;

  std::map<GroupKey, Vector> class_domain;  // a_{s,j}: 1/n_j^s on cell (s, j)
  std::map<int, Vector> class_mean;         // mean over domains of a_{s,j}
  std::map<int, Vector> prior_normalized;   // w_s: mean over classes of a_{s,j}
  Vector prior_mean;                        // mean over domains of w_s
  std::map<int, Vector> class_total;        // c_j: 1/n_j on class j
  std::map<int, double> class_size;         // n_j
  std::map<int, Vector> domain_uniform;     // 1/n^s on domain s
  Vector uniform;                           // 1/n everywhere

  /// Human-readable notes about lenient-mode adjustments.
  std::vector<std::string> adjustments;

  Index size() const { return uniform.size(); }
  int num_domains() const { return static_cast<int>(domain_ids.size()); }
};

WeightSet build_weights(const GroupIndex& groups, MissingClassPolicy policy = MissingClassPolicy::strict);

/// Conditional scatter H = (1/m) sum_{s,j} K (a_{s,j} - abar_j)(...)^T K.
Matrix conditional_scatter(const Matrix& k, const WeightSet& w);

/// Prior-normalized marginal scatter L = (1/m) sum_s K (wbar - w_s)(...)^T K.
Matrix prior_scatter(const Matrix& k, const WeightSet& w);

/// Marginal domain scatter with per-domain uniform weights in place of w_s.
Matrix marginal_scatter(const Matrix& k, const WeightSet& w);

/// Between-class scatter P = sum_j n_j K (c_j - u)(c_j - u)^T K.
Matrix between_scatter(const Matrix& k, const WeightSet& w);

/// Within-class scatter Q = K M K with M = I - sum_j n_j c_j c_j^T.
Matrix within_scatter(const Matrix& k, const WeightSet& w);

struct ScatterSet {
  Matrix conditional;  // H
  Matrix prior;        // L
  Matrix between;      // P
  Matrix within;       // Q

  Index size() const { return between.rows(); }
};

/// All four matrices from a centered training kernel.
ScatterSet build_scatters(const Matrix& centered_k, const WeightSet& w);

}  // namespace cidg
