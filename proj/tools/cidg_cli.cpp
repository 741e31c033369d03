// Command-line front end: synthetic data, experiments, grids, and models.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cidg/harness.hpp"

namespace fs = std::filesystem;
using namespace cidg;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

CrossCentering parse_mode(const std::string& mode) {
  return mode == "standard" ? CrossCentering::standard : CrossCentering::paper;
}

struct CsvOptions {
  std::string label_column = "label";
  std::string domain_column = "domain";
  std::string delimiter = ",";

  void add_to(CLI::App* app) {
    app->add_option("--label-column", label_column, "Label column name");
    app->add_option("--domain-column", domain_column, "Domain column name");
    app->add_option("--delimiter", delimiter, "Field delimiter")->check([](const std::string& d) {
      return d.size() == 1 ? std::string() : std::string("delimiter must be one character");
    });
  }
  CsvSchema schema() const { return {label_column, domain_column, {}, delimiter[0]}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional invariant domain generalization: fit, evaluate and inspect kernel projections"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic multi-domain CSV");
  std::string spec_path;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out;
  synth->add_option("--spec", spec_path, "Synthetic spec file (JSON); default: built-in three-domain benchmark");
  synth->add_option("--seed", synth_seed, "Override the spec's seed");
  synth->add_option("--out", synth_out, "Output CSV")->required();

  // run
  auto* run = app.add_subcommand("run", "Run an experiment and write its report");
  std::string run_config;
  std::string report_path;
  std::string table_path;
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--report", report_path, "JSON report path (default: <config stem>.report.json)");
  run->add_option("--table", table_path, "Text table path (default: <config stem>.report.txt)");

  // grid
  auto* grid = app.add_subcommand("grid", "Grid-search one repetition and optionally save the refitted models");
  std::string grid_config;
  int grid_repetition = 0;
  std::string grid_out;
  std::string model_dir;
  grid->add_option("--config", grid_config, "Experiment config (JSON)")->required();
  grid->add_option("--repetition", grid_repetition, "Repetition index (seed = base seed + index)")
      ->check(CLI::NonNegativeNumber);
  grid->add_option("--out", grid_out, "Grid scores JSON")->required();
  grid->add_option("--model-dir", model_dir, "Directory for <method>.model files");

  // project
  auto* proj = app.add_subcommand("project", "Project a CSV through a saved model");
  std::string proj_model;
  std::string proj_data;
  std::string proj_out;
  std::string proj_mode = "paper";
  CsvOptions proj_csv;
  proj->add_option("--model", proj_model, "Model file")->required();
  proj->add_option("--data", proj_data, "Input CSV")->required();
  proj->add_option("--out", proj_out, "Output CSV of learned coordinates")->required();
  proj->add_option("--mode", proj_mode, "Cross-kernel centering")->check(CLI::IsMember({"paper", "standard"}));
  proj_csv.add_to(proj);

  // export-features
  auto* exp = app.add_subcommand("export-features", "Write the first two learned coordinates for plotting");
  std::string exp_model;
  bool exp_identity = false;
  std::string exp_data;
  std::string exp_out;
  std::string exp_mode = "paper";
  CsvOptions exp_csv;
  auto* model_opt = exp->add_option("--model", exp_model, "Model file");
  exp->add_flag("--identity", exp_identity, "Export raw features instead of a model projection")->excludes(model_opt);
  exp->add_option("--data", exp_data, "Input CSV")->required();
  exp->add_option("--out", exp_out, "Output CSV")->required();
  exp->add_option("--mode", exp_mode, "Cross-kernel centering")->check(CLI::IsMember({"paper", "standard"}));
  exp_csv.add_to(exp);

  // inspect-model
  auto* inspect = app.add_subcommand("inspect-model", "Print a model's header and eigenvalues");
  std::string inspect_model;
  inspect->add_option("--model", inspect_model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      SyntheticSpec spec =
          spec_path.empty() ? SyntheticSpec::three_domain_benchmark() : load_synthetic_spec(spec_path);
      if (synth_seed) spec.seed = *synth_seed;
      const LabeledDataset data = generate_synthetic(spec);
      write_csv(data, synth_out);
      std::cout << "wrote " << data.size() << " rows to " << synth_out << "\n";
    } else if (*run) {
      const ExperimentConfig config = load_config(run_config);
      const ResultRecord record = run_experiment(config);
      const fs::path stem = fs::path(run_config).stem();
      const fs::path report = report_path.empty() ? fs::path(stem.string() + ".report.json") : fs::path(report_path);
      const fs::path table = table_path.empty() ? fs::path(stem.string() + ".report.txt") : fs::path(table_path);
      write_text(report, report_json(record, config));
      const std::string text = report_table(record);
      write_text(table, text);
      std::cout << text;
    } else if (*grid) {
      const ExperimentConfig config = load_config(grid_config);
      const LabeledDataset data = load_dataset(config.dataset);
      const RepetitionFit fit = fit_repetition(config, data, grid_repetition);
      write_text(grid_out, grid_json(fit));
      if (!model_dir.empty()) {
        fs::create_directories(model_dir);
        for (const auto& mf : fit.methods) {
          save_model(mf.fitted.model, fs::path(model_dir) / (to_string(mf.fitted.tag) + ".model"));
        }
      }
      for (const auto& mf : fit.methods) {
        std::printf("%-14s validation accuracy %.4f\n", to_string(mf.fitted.tag).c_str(), mf.search.best_accuracy);
      }
    } else if (*proj) {
      const ProjectionModel model = load_model(proj_model);
      LabeledDataset data = load_csv(proj_data, proj_csv.schema());
      const Matrix z = project(model, data.features, parse_mode(proj_mode));
      data.features = z;
      data.feature_names.clear();
      for (Index c = 0; c < z.cols(); ++c) data.feature_names.push_back("z" + std::to_string(c + 1));
      write_csv(data, proj_out);
    } else if (*exp) {
      if (exp_model.empty() && !exp_identity) throw Error("export-features needs --model or --identity");
      const LabeledDataset data = load_csv(exp_data, exp_csv.schema());
      const ProjectionModel model =
          exp_identity ? ProjectionModel::identity(data.dimension()) : load_model(exp_model);
      export_features(model, data, exp_out, parse_mode(exp_mode));
    } else if (*inspect) {
      const ProjectionModel model = load_model(inspect_model);
      if (model.kind == ProjectionModel::Kind::identity) {
        std::printf("kind: identity\ninput dimension: %lld\n", static_cast<long long>(model.input_dimension()));
      } else {
        std::printf("kind: kernel\nkernel: %s", model.kernel.family == KernelSpec::Family::rbf ? "rbf" : "linear");
        if (model.kernel.bandwidth) std::printf(" (sigma = %.17g)", *model.kernel.bandwidth);
        std::printf("\ntraining samples: %lld\ninput dimension: %lld\ndirections: %lld\nepsilon: %.17g\n",
                    static_cast<long long>(model.training_features.rows()),
                    static_cast<long long>(model.input_dimension()), static_cast<long long>(model.dims()),
                    model.epsilon);
        std::printf("eigenvalues:");
        for (Index i = 0; i < model.eigenvalues.size(); ++i) std::printf(" %.10g", model.eigenvalues(i));
        std::printf("\n");
      }
      for (const auto& w : model.warnings) std::printf("warning: %s\n", w.c_str());
    }
  } catch (const Error& e) {
    std::cerr << "cidg: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cidg: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
