#include "cidg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cidg/random.hpp"

namespace cidg {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one line, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

bool parse_integer(const std::string& s, long long& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

// Dense 1-based ids for a set of names; numeric order when every name is an
// integer, lexicographic otherwise.
std::vector<std::string> ordered_names(const std::set<std::string>& names) {
  std::vector<std::string> out(names.begin(), names.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    long long v = 0;
    return parse_integer(s, v);
  });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      long long x = 0;
      long long y = 0;
      parse_integer(a, x);
      parse_integer(b, y);
      return x != y ? x < y : a < b;
    });
  }
  return out;
}

std::string quote_if_needed(const std::string& s, char delimiter) {
  if (s.find(delimiter) == std::string::npos && s.find('"') == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void LabeledDataset::validate() const {
  const Index n = size();
  if (n == 0) throw Error("dataset is empty");
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(domains.size()) != n) {
    throw Error("dataset has " + std::to_string(n) + " feature rows but " +
                std::to_string(labels.size()) + " labels and " + std::to_string(domains.size()) +
                " domain ids");
  }
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    if (labels[row] < 1 || labels[row] > num_classes()) {
      throw Error("row " + std::to_string(i) + ": class id " + std::to_string(labels[row]) +
                  " outside 1.." + std::to_string(num_classes()));
    }
    if (domains[row] < 1 || domains[row] > num_domains()) {
      throw Error("row " + std::to_string(i) + ": domain id " + std::to_string(domains[row]) +
                  " outside 1.." + std::to_string(num_domains()));
    }
    for (Index c = 0; c < dimension(); ++c) {
      if (!std::isfinite(features(i, c))) {
        throw Error("row " + std::to_string(i) + ", column " + std::to_string(c) +
                    ": non-finite feature value");
      }
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<Index>& rows) const {
  LabeledDataset out;
  out.features.resize(static_cast<Index>(rows.size()), dimension());
  out.labels.reserve(rows.size());
  out.domains.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = features.row(rows[r]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
    out.domains.push_back(domains[static_cast<std::size_t>(rows[r])]);
  }
  out.feature_names = feature_names;
  out.label_names = label_names;
  out.domain_names = domain_names;
  return out;
}

LabeledDataset LabeledDataset::select_domains(const std::vector<int>& domain_ids) const {
  std::vector<Index> rows;
  for (Index i = 0; i < size(); ++i) {
    const int d = domains[static_cast<std::size_t>(i)];
    if (std::find(domain_ids.begin(), domain_ids.end(), d) != domain_ids.end()) rows.push_back(i);
  }
  return subset(rows);
}

int LabeledDataset::domain_id(const std::string& name) const {
  for (std::size_t i = 0; i < domain_names.size(); ++i) {
    if (domain_names[i] == name) return static_cast<int>(i) + 1;
  }
  throw Error("unknown domain '" + name + "'");
}

Index GroupIndex::count(int domain, int label) const {
  const auto it = index_of.find({domain, label});
  return it == index_of.end() ? 0 : static_cast<Index>(it->second.size());
}

GroupIndex group_index(const LabeledDataset& data) {
  GroupIndex g;
  std::set<int> domains;
  std::set<int> classes;
  for (Index i = 0; i < data.size(); ++i) {
    const auto row = static_cast<std::size_t>(i);
    const GroupKey key{data.domains[row], data.labels[row]};
    g.index_of[key].push_back(i);
    ++g.per_domain[key.domain];
    ++g.per_class[key.label];
    domains.insert(key.domain);
    classes.insert(key.label);
  }
  g.domain_ids.assign(domains.begin(), domains.end());
  g.class_ids.assign(classes.begin(), classes.end());
  g.total = data.size();
  return g;
}

void SyntheticSpec::validate() const {
  if (cells.empty()) throw Error("synthetic spec has no cells");
  std::set<GroupKey> seen;
  int max_domain = 0;
  int max_label = 0;
  for (const auto& c : cells) {
    const std::string where =
        "cell (domain " + std::to_string(c.domain) + ", class " + std::to_string(c.label) + ")";
    if (c.domain < 1 || c.label < 1) throw Error(where + ": ids must be >= 1");
    if (!(c.std_x > 0.0) || !(c.std_y > 0.0)) throw Error(where + ": standard deviations must be > 0");
    if (!std::isfinite(c.mean_x) || !std::isfinite(c.mean_y) || !std::isfinite(c.std_x) ||
        !std::isfinite(c.std_y)) {
      throw Error(where + ": non-finite parameter");
    }
    if (c.count < 1) throw Error(where + ": count must be > 0");
    if (!seen.insert({c.domain, c.label}).second) throw Error(where + ": duplicated");
    max_domain = std::max(max_domain, c.domain);
    max_label = std::max(max_label, c.label);
  }
  std::set<int> domains;
  std::set<int> labels;
  for (const auto& c : cells) {
    domains.insert(c.domain);
    labels.insert(c.label);
  }
  if (static_cast<int>(domains.size()) != max_domain || static_cast<int>(labels.size()) != max_label) {
    throw Error("synthetic spec ids must form dense ranges 1..m and 1..C");
  }
}

SyntheticSpec SyntheticSpec::three_domain_benchmark(std::uint64_t seed) {
  // {domain, class, mean x, std x, mean y, std y, count}
  SyntheticSpec spec;
  spec.seed = seed;
  spec.cells = {
      {1, 1, 1.0, 0.3, 2.0, 0.3, 30},  {1, 2, 2.0, 0.3, 1.0, 0.3, 20},
      {1, 3, 3.0, 0.3, 2.0, 0.3, 30},  {2, 1, 3.5, 0.3, 2.5, 0.3, 20},
      {2, 2, 4.5, 0.3, 1.5, 0.3, 60},  {2, 3, 5.5, 0.3, 2.5, 0.3, 40},
      {3, 1, 8.0, 0.3, 2.5, 0.3, 40},  {3, 2, 9.5, 0.3, 1.5, 0.3, 40},
      {3, 3, 10.0, 0.3, 2.5, 0.3, 40},
  };
  return spec;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Index n = 0;
  int m = 0;
  int num_classes = 0;
  for (const auto& c : spec.cells) {
    n += c.count;
    m = std::max(m, c.domain);
    num_classes = std::max(num_classes, c.label);
  }

  LabeledDataset data;
  data.features.resize(n, 2);
  data.labels.reserve(static_cast<std::size_t>(n));
  data.domains.reserve(static_cast<std::size_t>(n));
  data.feature_names = {"x", "y"};
  for (int c = 1; c <= num_classes; ++c) data.label_names.push_back(std::to_string(c));
  for (int s = 1; s <= m; ++s) data.domain_names.push_back(std::to_string(s));

  Rng rng(spec.seed);
  Index row = 0;
  for (const auto& c : spec.cells) {
    for (Index k = 0; k < c.count; ++k, ++row) {
      data.features(row, 0) = rng.normal(c.mean_x, c.std_x);
      data.features(row, 1) = rng.normal(c.mean_y, c.std_y);
      data.labels.push_back(c.label);
      data.domains.push_back(c.domain);
    }
  }
  return data;
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line, schema.delimiter);

  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(path.string() + ": no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_of(schema.label_column);
  const std::size_t domain_col = column_of(schema.domain_column);
  if (label_col == domain_col) throw Error(path.string() + ": label and domain columns coincide");

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != label_col && c != domain_col) {
        feature_cols.push_back(c);
        feature_names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(column_of(name));
      feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw Error(path.string() + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_strings;
  std::vector<std::string> domain_strings;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_line(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      const std::string& cell = fields[c];
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": column '" + header[c] +
                    "': invalid feature value '" + cell + "'");
      }
      values.push_back(v);
    }
    if (fields[label_col].empty()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": empty label in column '" +
                  header[label_col] + "'");
    }
    if (fields[domain_col].empty()) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": empty domain in column '" +
                  header[domain_col] + "'");
    }
    rows.push_back(std::move(values));
    label_strings.push_back(fields[label_col]);
    domain_strings.push_back(fields[domain_col]);
  }
  if (rows.empty()) throw Error(path.string() + ": no data rows");

  LabeledDataset data;
  data.feature_names = feature_names;
  data.label_names = ordered_names({label_strings.begin(), label_strings.end()});
  data.domain_names = ordered_names({domain_strings.begin(), domain_strings.end()});
  auto id_of = [](const std::vector<std::string>& names, const std::string& s) {
    return static_cast<int>(std::find(names.begin(), names.end(), s) - names.begin()) + 1;
  };

  const auto n = static_cast<Index>(rows.size());
  data.features.resize(n, static_cast<Index>(feature_cols.size()));
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      data.features(i, static_cast<Index>(c)) = rows[r][c];
    }
    data.labels.push_back(id_of(data.label_names, label_strings[r]));
    data.domains.push_back(id_of(data.domain_names, domain_strings[r]));
  }
  data.validate();
  return data;
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write CSV file '" + path.string() + "'");
  for (Index c = 0; c < data.dimension(); ++c) {
    const auto name = c < static_cast<Index>(data.feature_names.size())
                          ? data.feature_names[static_cast<std::size_t>(c)]
                          : "f" + std::to_string(c);
    out << quote_if_needed(name, delimiter) << delimiter;
  }
  out << "label" << delimiter << "domain\n";
  for (Index i = 0; i < data.size(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (Index c = 0; c < data.dimension(); ++c) out << format_double(data.features(i, c)) << delimiter;
    out << quote_if_needed(data.label_names[static_cast<std::size_t>(data.labels[r] - 1)], delimiter)
        << delimiter
        << quote_if_needed(data.domain_names[static_cast<std::size_t>(data.domains[r] - 1)], delimiter)
        << '\n';
  }
  if (!out) throw Error("failed writing CSV file '" + path.string() + "'");
}

Index split_first_count(Index count, double fraction) {
  if (count <= 1) return count;
  const auto wanted = static_cast<Index>(std::floor(fraction * static_cast<double>(count)));
  return std::clamp<Index>(wanted, 1, count - 1);
}

SplitResult split(const LabeledDataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
  if (data.size() < 2) throw Error("split needs at least two rows");

  const GroupIndex groups = group_index(data);
  std::vector<char> to_first(static_cast<std::size_t>(data.size()), 0);
  SplitResult result;
  Rng rng(seed);
  for (const auto& [key, rows] : groups.index_of) {
    std::vector<Index> shuffled = rows;
    rng.shuffle(shuffled);
    const Index take = split_first_count(static_cast<Index>(rows.size()), fraction);
    if (rows.size() == 1) result.unsplittable.push_back(key);
    for (Index k = 0; k < take; ++k) to_first[static_cast<std::size_t>(shuffled[static_cast<std::size_t>(k)])] = 1;
  }

  std::vector<Index> first;
  std::vector<Index> second;
  for (Index i = 0; i < data.size(); ++i) (to_first[static_cast<std::size_t>(i)] ? first : second).push_back(i);
  if (second.empty()) throw Error("split left no rows on the second side");
  result.first = data.subset(first);
  result.second = data.subset(second);
  return result;
}

}  // namespace cidg
