#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cidg/types.hpp"

namespace cidg {

/// Samples from one or more labeled domains.
///
/// Class ids lie in 1..C and domain ids in 1..m. When the dataset came from
/// a file, `label_names[c - 1]` and `domain_names[s - 1]` hold the original
/// strings; generated datasets use the decimal ids as names.
struct LabeledDataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  std::vector<int> domains;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  std::vector<std::string> domain_names;

  Index size() const { return features.rows(); }
  Index dimension() const { return features.cols(); }
  int num_classes() const { return static_cast<int>(label_names.size()); }
  int num_domains() const { return static_cast<int>(domain_names.size()); }

  /// Throws Error when lengths disagree, ids fall outside the name tables,
  /// or a feature is non-finite.
  void validate() const;

  /// Rows at `rows`, in the given order; name tables are shared.
  LabeledDataset subset(const std::vector<Index>& rows) const;

  /// Rows whose domain id is in `domain_ids`, in original order.
  LabeledDataset select_domains(const std::vector<int>& domain_ids) const;

  /// Domain id for an original domain name, or Error.
  int domain_id(const std::string& name) const;

  bool operator==(const LabeledDataset&) const = default;
};

struct GroupKey {
  int domain = 0;
  int label = 0;
  auto operator<=>(const GroupKey&) const = default;
};

/// Row indices partitioned by (domain, class).
struct GroupIndex {
  std::vector<int> domain_ids;  // sorted, present in the data
  std::vector<int> class_ids;   // sorted, present in the data
  std::map<GroupKey, std::vector<Index>> index_of;
  std::map<int, Index> per_domain;
  std::map<int, Index> per_class;
  Index total = 0;

  /// n_j^s; zero for an absent cell.
  Index count(int domain, int label) const;
  int num_domains() const { return static_cast<int>(domain_ids.size()); }
  int num_classes() const { return static_cast<int>(class_ids.size()); }
};

GroupIndex group_index(const LabeledDataset& data);

/// Parameters of one (domain, class) cell of the synthetic generator.
struct GaussianCell {
  int domain = 1;
  int label = 1;
  double mean_x = 0.0;
  double std_x = 1.0;
  double mean_y = 0.0;
  double std_y = 1.0;
  Index count = 1;
};

/// Axis-aligned Gaussian blobs in two dimensions, one per cell.
struct SyntheticSpec {
  std::vector<GaussianCell> cells;
  std::uint64_t seed = 0;

  void validate() const;

  /// Three domains, three classes, 320 points; domain 3 sits far to the
  /// right of domains 1 and 2 while class 2 stays below classes 1 and 3.
  static SyntheticSpec three_domain_benchmark(std::uint64_t seed = 0);
};

/// Draws every cell in order (x then y per point). Ids are the cell's
/// domain and label numbers, which must be dense 1-based ranges.
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

struct CsvSchema {
  std::string label_column = "label";
  std::string domain_column = "domain";
  std::vector<std::string> feature_columns;  // empty: every other column
  char delimiter = ',';
};

/// Reads a headered CSV. Label and domain strings are remapped to dense ids;
/// names that all parse as integers are ordered numerically, otherwise
/// lexicographically, so the mapping does not depend on row order.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes features, then label and domain names, with round-trip precision.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path, char delimiter = ',');

struct SplitResult {
  LabeledDataset first;
  LabeledDataset second;
  /// (domain, class) cells that had a single row and went to `first`.
  std::vector<GroupKey> unsplittable;
};

/// Stratified split by (domain, class). Each cell of size c >= 2 sends
/// clamp(floor(fraction * c), 1, c - 1) rows to `first`, chosen by a seeded
/// shuffle of the cell; the rest go to `second`. Both sides keep the
/// original row order.
SplitResult split(const LabeledDataset& data, double fraction, std::uint64_t seed);

/// Rows sent to `first` for a cell of `count` rows.
Index split_first_count(Index count, double fraction);

}  // namespace cidg
