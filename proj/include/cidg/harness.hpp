#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cidg/classify.hpp"
#include "cidg/dataset.hpp"
#include "cidg/kernel.hpp"
#include "cidg/solver.hpp"

namespace cidg {

/// Candidate values per hyperparameter. Axes a method does not use are
/// ignored for that method. An empty `q` means {2, C*m, 2*C*m} with C and m
/// counted on the fitting data.
struct HyperGrid {
  std::vector<double> bandwidth_scale{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> gamma{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> alpha{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> epsilon{1e-5};
  std::vector<Index> q;
  std::vector<Index> k{1, 3, 5};

  void validate() const;
};

/// One point of the grid. Unused axes keep their defaults and are reported
/// as null.
struct HyperParams {
  double bandwidth_scale = 1.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double epsilon = 1e-5;
  Index q = 0;
  Index k = 1;

  bool operator==(const HyperParams&) const = default;
};

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::filesystem::path> csv;
  CsvSchema schema;
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<std::string> source_domains;
  std::vector<std::string> target_domains;
  std::vector<MethodTag> methods{MethodTag::raw_knn, MethodTag::kpca, MethodTag::dica_marginal,
                                 MethodTag::kfda, MethodTag::cidg};
  KernelSpec kernel = KernelSpec::median();
  HyperGrid grid;
  double train_fraction = 0.7;
  double validation_fraction = 0.3;
  int repetitions = 5;
  std::uint64_t seed = 0;
  CrossCentering centering = CrossCentering::paper;
  MissingClassPolicy missing_classes = MissingClassPolicy::strict;

  void validate() const;
};

/// Config file (JSON) in the versioned schema of docs/formats.md. Relative
/// dataset paths are resolved against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
SyntheticSpec parse_synthetic_spec(const std::string& text);

LabeledDataset load_dataset(const DatasetSource& source);

/// Settings a grid search needs beyond the data and the method.
struct SearchSettings {
  KernelSpec kernel = KernelSpec::median();
  CrossCentering centering = CrossCentering::paper;
  MissingClassPolicy missing_classes = MissingClassPolicy::strict;
};

struct GridPoint {
  HyperParams params;
  std::optional<double> accuracy;  // unset when the point failed
  std::string failure;
};

struct GridResult {
  HyperParams best;
  double best_accuracy = 0.0;
  std::vector<GridPoint> points;  // in search order
};

/// Points of `grid` relevant to `tag`, outermost axis first:
/// bandwidth_scale, gamma, alpha, epsilon, q, k.
std::vector<HyperParams> grid_points(MethodTag tag, const HyperGrid& grid, const std::vector<Index>& q_values);

/// q candidates for `data`: the grid's own list or {2, C*m, 2*C*m}.
std::vector<Index> q_candidates(const HyperGrid& grid, const LabeledDataset& data);

/// Exhaustive search; the best point has the highest validation accuracy,
/// earliest in grid order on ties. Throws when every point fails.
GridResult grid_search(const LabeledDataset& train, const LabeledDataset& validation, MethodTag tag,
                       const HyperGrid& grid, const SearchSettings& settings = {});

Method method_for(MethodTag tag, const HyperParams& params, MissingClassPolicy policy);
KernelSpec kernel_for(const KernelSpec& base, const HyperParams& params);

/// A fitted method: model plus the projected training features KNN uses.
struct FittedMethod {
  MethodTag tag = MethodTag::cidg;
  HyperParams params;
  ProjectionModel model;
  Matrix train_embedding;
  std::vector<int> train_labels;

  std::vector<int> predict(const Matrix& features, CrossCentering mode) const;
};

FittedMethod fit_with(MethodTag tag, const HyperParams& params, const LabeledDataset& train,
                      const SearchSettings& settings);

struct MethodFit {
  FittedMethod fitted;
  GridResult search;
};

/// Everything fitted for one repetition. Only source-domain rows of the
/// input are used.
struct RepetitionFit {
  int repetition = 0;
  std::uint64_t seed = 0;
  LabeledDataset train;  // stratified train split of the source rows
  std::vector<MethodFit> methods;
};

RepetitionFit fit_repetition(const ExperimentConfig& config, const LabeledDataset& data, int repetition);

struct RepetitionResult {
  int repetition = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double validation_accuracy = 0.0;
  HyperParams chosen;
  Index dims = 0;
  std::vector<std::string> warnings;
};

struct MethodResult {
  MethodTag tag = MethodTag::cidg;
  std::vector<RepetitionResult> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ResultRecord {
  std::vector<std::string> source_domains;
  std::vector<std::string> target_domains;
  Index target_size = 0;
  std::vector<MethodResult> methods;

  const MethodResult& method(MethodTag tag) const;
};

/// Mean and population standard deviation, summed in sorted order so the
/// result does not depend on the order of `values`.
std::pair<double, double> mean_and_stddev(std::vector<double> values);

ResultRecord run_experiment(const ExperimentConfig& config);
ResultRecord run_experiment(const ExperimentConfig& config, const LabeledDataset& data);

/// JSON report and aligned text table.
std::string report_json(const ResultRecord& record, const ExperimentConfig& config);
std::string report_table(const ResultRecord& record);
std::string grid_json(const RepetitionFit& fit);

/// Writes z1, z2, label, domain for every row of `data`. Requires at least
/// two learned coordinates.
void export_features(const ProjectionModel& model, const LabeledDataset& data, const std::filesystem::path& path,
                     CrossCentering mode = CrossCentering::paper);

}  // namespace cidg
