// Config parsing and report serialization.

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cidg/harness.hpp"

namespace cidg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kConfigVersion = 1;
constexpr int kReportVersion = 1;

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string("cannot open ") + what + " '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed ") + what + ": " + e.what());
  }
}

void check_keys(const json& node, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!node.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, value] : node.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(where + ": unknown key '" + key + "'");
  }
}

void check_version(const json& node, const std::string& where) {
  if (node.contains("version") && node.at("version") != kConfigVersion) {
    throw Error(where + ": unsupported version " + node.at("version").dump());
  }
}

// Domain names may be written as strings or integers.
std::string name_of(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error("domain names must be strings or integers, got " + v.dump());
}

template <typename T>
std::vector<T> list_of(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(where + " must be a list");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw Error(where + ": " + e.what());
  }
}

GaussianCell parse_cell(const json& c) {
  check_keys(c, {"domain", "class", "x", "y", "count"}, "synthetic cell");
  auto pair = [&](const char* key) {
    const auto v = list_of<double>(c.at(key), std::string("synthetic cell '") + key + "'");
    if (v.size() != 2) throw Error(std::string("synthetic cell '") + key + "' must be [mean, std]");
    return v;
  };
  try {
    GaussianCell cell;
    cell.domain = c.at("domain").get<int>();
    cell.label = c.at("class").get<int>();
    const auto x = pair("x");
    const auto y = pair("y");
    cell.mean_x = x[0];
    cell.std_x = x[1];
    cell.mean_y = y[0];
    cell.std_y = y[1];
    cell.count = c.at("count").get<Index>();
    return cell;
  } catch (const json::exception& e) {
    throw Error(std::string("synthetic cell: ") + e.what());
  }
}

SyntheticSpec synthetic_from_json(const json& node) {
  check_keys(node, {"version", "seed", "cells"}, "synthetic spec");
  check_version(node, "synthetic spec");
  SyntheticSpec spec;
  if (node.contains("seed")) spec.seed = node.at("seed").get<std::uint64_t>();
  if (!node.contains("cells") || !node.at("cells").is_array()) throw Error("synthetic spec needs a 'cells' list");
  for (const auto& c : node.at("cells")) spec.cells.push_back(parse_cell(c));
  spec.validate();
  return spec;
}

KernelSpec kernel_from_json(const json& node) {
  check_keys(node, {"family", "bandwidth"}, "kernel");
  if (node.contains("family") && node.at("family") != "rbf") {
    throw Error("kernel family must be \"rbf\"");
  }
  if (!node.contains("bandwidth") || node.at("bandwidth") == "median") return KernelSpec::median();
  if (!node.at("bandwidth").is_number()) throw Error("kernel bandwidth must be a number or \"median\"");
  const double sigma = node.at("bandwidth").get<double>();
  if (!(sigma > 0.0)) throw Error("kernel bandwidth must be > 0");
  return KernelSpec::rbf(sigma);
}

HyperGrid grid_from_json(const json& node) {
  check_keys(node, {"bandwidth_scale", "gamma", "alpha", "epsilon", "q", "k"}, "grid");
  HyperGrid grid;
  if (node.contains("bandwidth_scale")) grid.bandwidth_scale = list_of<double>(node.at("bandwidth_scale"), "grid.bandwidth_scale");
  if (node.contains("gamma")) grid.gamma = list_of<double>(node.at("gamma"), "grid.gamma");
  if (node.contains("alpha")) grid.alpha = list_of<double>(node.at("alpha"), "grid.alpha");
  if (node.contains("epsilon")) grid.epsilon = list_of<double>(node.at("epsilon"), "grid.epsilon");
  if (node.contains("q")) grid.q = list_of<Index>(node.at("q"), "grid.q");
  if (node.contains("k")) grid.k = list_of<Index>(node.at("k"), "grid.k");
  return grid;
}

DatasetSource dataset_from_json(const json& node, const std::filesystem::path& base_dir) {
  check_keys(node, {"synthetic", "synthetic_file", "csv"}, "dataset");
  DatasetSource source;
  if (node.size() != 1) throw Error("dataset must have exactly one of 'synthetic', 'synthetic_file', 'csv'");
  auto resolve_path = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (node.contains("synthetic")) source.synthetic = synthetic_from_json(node.at("synthetic"));
  if (node.contains("synthetic_file")) {
    source.synthetic = load_synthetic_spec(resolve_path(node.at("synthetic_file").get<std::string>()));
  }
  if (node.contains("csv")) {
    const json& csv = node.at("csv");
    check_keys(csv, {"path", "label_column", "domain_column", "feature_columns", "delimiter"}, "dataset.csv");
    if (!csv.contains("path")) throw Error("dataset.csv needs a 'path'");
    source.csv = resolve_path(csv.at("path").get<std::string>());
    if (csv.contains("label_column")) source.schema.label_column = csv.at("label_column").get<std::string>();
    if (csv.contains("domain_column")) source.schema.domain_column = csv.at("domain_column").get<std::string>();
    if (csv.contains("feature_columns")) {
      source.schema.feature_columns = list_of<std::string>(csv.at("feature_columns"), "dataset.csv.feature_columns");
    }
    if (csv.contains("delimiter")) {
      const auto d = csv.at("delimiter").get<std::string>();
      if (d.size() != 1) throw Error("dataset.csv.delimiter must be a single character");
      source.schema.delimiter = d[0];
    }
  }
  return source;
}

ordered_json nullable(bool used, double v) { return used ? ordered_json(v) : ordered_json(nullptr); }

ordered_json params_json(MethodTag tag, const HyperParams& p) {
  const bool kernel = tag != MethodTag::raw_knn;
  ordered_json out;
  out["bandwidth_scale"] = nullable(kernel, p.bandwidth_scale);
  out["gamma"] = nullable(tag == MethodTag::cidg, p.gamma);
  out["alpha"] = nullable(tag == MethodTag::cidg || tag == MethodTag::dica_marginal, p.alpha);
  out["epsilon"] = nullable(tag == MethodTag::cidg || tag == MethodTag::dica_marginal || tag == MethodTag::kfda,
                            p.epsilon);
  out["q"] = kernel ? ordered_json(p.q) : ordered_json(nullptr);
  out["k"] = p.k;
  return out;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

std::string percent(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f +- %.2f", 100.0 * mean, 100.0 * stddev);
  return buf;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  return synthetic_from_json(parse_json(text, "synthetic spec"));
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  try {
    return parse_synthetic_spec(read_file(path, "synthetic spec"));
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw Error(path.string() + ": " + what);
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json root = parse_json(text, "config");
  check_keys(root,
             {"version", "dataset", "source_domains", "target_domains", "methods", "kernel", "grid",
              "train_fraction", "validation_fraction", "repetitions", "seed", "centering", "missing_classes"},
             "config");
  check_version(root, "config");
  ExperimentConfig config;
  try {
    if (!root.contains("dataset")) throw Error("config needs a 'dataset'");
    config.dataset = dataset_from_json(root.at("dataset"), base_dir);
    if (root.contains("source_domains")) {
      for (const auto& v : root.at("source_domains")) config.source_domains.push_back(name_of(v));
    }
    if (root.contains("target_domains")) {
      for (const auto& v : root.at("target_domains")) config.target_domains.push_back(name_of(v));
    }
    if (root.contains("methods")) {
      config.methods.clear();
      for (const auto& m : list_of<std::string>(root.at("methods"), "methods")) {
        config.methods.push_back(method_from_string(m));
      }
    }
    if (root.contains("kernel")) config.kernel = kernel_from_json(root.at("kernel"));
    if (root.contains("grid")) config.grid = grid_from_json(root.at("grid"));
    if (root.contains("train_fraction")) config.train_fraction = root.at("train_fraction").get<double>();
    if (root.contains("validation_fraction")) config.validation_fraction = root.at("validation_fraction").get<double>();
    if (root.contains("repetitions")) config.repetitions = root.at("repetitions").get<int>();
    if (root.contains("seed")) config.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("centering")) {
      const auto mode = root.at("centering").get<std::string>();
      if (mode == "paper") {
        config.centering = CrossCentering::paper;
      } else if (mode == "standard") {
        config.centering = CrossCentering::standard;
      } else {
        throw Error("centering must be \"paper\" or \"standard\"");
      }
    }
    if (root.contains("missing_classes")) {
      const auto policy = root.at("missing_classes").get<std::string>();
      if (policy == "strict") {
        config.missing_classes = MissingClassPolicy::strict;
      } else if (policy == "lenient") {
        config.missing_classes = MissingClassPolicy::lenient;
      } else {
        throw Error("missing_classes must be \"strict\" or \"lenient\"");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path, "config file");
  try {
    return parse_config(text, path.parent_path());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string report_json(const ResultRecord& record, const ExperimentConfig& config) {
  ordered_json root;
  root["version"] = kReportVersion;
  root["source_domains"] = record.source_domains;
  root["target_domains"] = record.target_domains;
  root["target_size"] = record.target_size;
  root["repetitions"] = config.repetitions;
  root["seed"] = config.seed;
  root["train_fraction"] = config.train_fraction;
  root["validation_fraction"] = config.validation_fraction;
  root["centering"] = config.centering == CrossCentering::paper ? "paper" : "standard";
  root["kernel_bandwidth"] = config.kernel.bandwidth ? ordered_json(*config.kernel.bandwidth) : ordered_json("median");
  ordered_json methods = ordered_json::array();
  for (const auto& m : record.methods) {
    ordered_json entry;
    entry["method"] = to_string(m.tag);
    entry["mean_accuracy"] = m.mean;
    entry["std_accuracy"] = m.stddev;
    ordered_json runs = ordered_json::array();
    for (const auto& run : m.runs) {
      ordered_json r;
      r["repetition"] = run.repetition;
      r["seed"] = run.seed;
      r["accuracy"] = run.accuracy;
      r["validation_accuracy"] = run.validation_accuracy;
      r["dims"] = run.dims;
      r["chosen"] = params_json(m.tag, run.chosen);
      r["warnings"] = run.warnings;
      runs.push_back(std::move(r));
    }
    entry["runs"] = std::move(runs);
    methods.push_back(std::move(entry));
  }
  root["methods"] = std::move(methods);
  return root.dump(2) + "\n";
}

std::string report_table(const ResultRecord& record) {
  std::vector<std::string> header{"Source", "Target"};
  std::vector<std::string> row{join(record.source_domains), join(record.target_domains)};
  for (const auto& m : record.methods) {
    header.push_back(to_string(m.tag));
    row.push_back(percent(m.mean, m.stddev));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = std::max(header[i].size(), row[i].size());

  auto line = [&](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += " " + cells[i] + std::string(width[i] - cells[i].size(), ' ') + " |";
    }
    return out + "\n";
  };
  std::string rule = "+";
  for (std::size_t w : width) rule += std::string(w + 2, '-') + "+";
  rule += "\n";
  return rule + line(header) + rule + line(row) + rule;
}

std::string grid_json(const RepetitionFit& fit) {
  ordered_json root;
  root["version"] = kReportVersion;
  root["repetition"] = fit.repetition;
  root["seed"] = fit.seed;
  ordered_json methods = ordered_json::array();
  for (const auto& mf : fit.methods) {
    ordered_json entry;
    entry["method"] = to_string(mf.fitted.tag);
    entry["best"] = params_json(mf.fitted.tag, mf.search.best);
    entry["best_validation_accuracy"] = mf.search.best_accuracy;
    ordered_json points = ordered_json::array();
    for (const auto& p : mf.search.points) {
      ordered_json point;
      point["params"] = params_json(mf.fitted.tag, p.params);
      if (p.accuracy) {
        point["accuracy"] = *p.accuracy;
      } else {
        point["accuracy"] = nullptr;
        point["failure"] = p.failure;
      }
      points.push_back(std::move(point));
    }
    entry["points"] = std::move(points);
    methods.push_back(std::move(entry));
  }
  root["methods"] = std::move(methods);
  return root.dump(2) + "\n";
}

}  // namespace cidg
