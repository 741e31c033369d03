#include "cidg/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "cidg/random.hpp"

namespace cidg {

void HyperGrid::validate() const {
  auto non_empty = [](bool empty, const char* axis) {
    if (empty) throw Error(std::string("grid axis '") + axis + "' is empty");
  };
  non_empty(bandwidth_scale.empty(), "bandwidth_scale");
  non_empty(gamma.empty(), "gamma");
  non_empty(alpha.empty(), "alpha");
  non_empty(epsilon.empty(), "epsilon");
  non_empty(k.empty(), "k");
  for (double v : bandwidth_scale) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("bandwidth_scale values must be finite and > 0");
  }
  for (double v : gamma) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("gamma values must be finite and >= 0");
  }
  for (double v : alpha) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("alpha values must be finite and >= 0");
  }
  for (double v : epsilon) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("epsilon values must be finite and > 0");
  }
  for (Index v : q) {
    if (v < 1) throw Error("q values must be >= 1");
  }
  for (Index v : k) {
    if (v < 1) throw Error("k values must be >= 1");
  }
}

void ExperimentConfig::validate() const {
  if (dataset.synthetic.has_value() == dataset.csv.has_value()) {
    throw Error("config must name exactly one dataset source (synthetic or csv)");
  }
  if (source_domains.empty()) throw Error("config lists no source domains");
  if (target_domains.empty()) throw Error("config lists no target domains");
  for (const auto& t : target_domains) {
    if (std::find(source_domains.begin(), source_domains.end(), t) != source_domains.end()) {
      throw Error("domain '" + t + "' is both a source and a target");
    }
  }
  if (methods.empty()) throw Error("config lists no methods");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train_fraction must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error("validation_fraction must lie in (0, 1)");
  }
  if (repetitions < 1) throw Error("repetitions must be >= 1");
  if (kernel.bandwidth && !(*kernel.bandwidth > 0.0)) throw Error("kernel bandwidth must be > 0");
  grid.validate();
}

LabeledDataset load_dataset(const DatasetSource& source) {
  if (source.synthetic) return generate_synthetic(*source.synthetic);
  if (source.csv) return load_csv(*source.csv, source.schema);
  throw Error("no dataset source configured");
}

std::vector<Index> q_candidates(const HyperGrid& grid, const LabeledDataset& data) {
  if (!grid.q.empty()) return grid.q;
  const GroupIndex groups = group_index(data);
  const Index cm = static_cast<Index>(groups.num_classes()) * groups.num_domains();
  std::vector<Index> out;
  for (Index v : {Index{2}, cm, 2 * cm}) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

std::vector<HyperParams> grid_points(MethodTag tag, const HyperGrid& grid, const std::vector<Index>& q_values) {
  const bool kernel = tag != MethodTag::raw_knn;
  const bool uses_gamma = tag == MethodTag::cidg;
  const bool uses_alpha = tag == MethodTag::cidg || tag == MethodTag::dica_marginal;
  const bool uses_epsilon = tag == MethodTag::cidg || tag == MethodTag::dica_marginal || tag == MethodTag::kfda;

  const HyperParams defaults;
  auto axis = [](bool used, const auto& values, auto fallback) {
    using T = std::decay_t<decltype(fallback)>;
    return used ? std::vector<T>(values.begin(), values.end()) : std::vector<T>{fallback};
  };
  const auto scales = axis(kernel, grid.bandwidth_scale, defaults.bandwidth_scale);
  const auto gammas = axis(uses_gamma, grid.gamma, defaults.gamma);
  const auto alphas = axis(uses_alpha, grid.alpha, defaults.alpha);
  const auto epsilons = axis(uses_epsilon, grid.epsilon, defaults.epsilon);
  const auto qs = axis(kernel, q_values, defaults.q);

  std::vector<HyperParams> points;
  for (double s : scales) {
    for (double g : gammas) {
      for (double a : alphas) {
        for (double e : epsilons) {
          for (Index q : qs) {
            for (Index k : grid.k) points.push_back({s, g, a, e, q, k});
          }
        }
      }
    }
  }
  return points;
}

Method method_for(MethodTag tag, const HyperParams& params, MissingClassPolicy policy) {
  Method m;
  m.tag = tag;
  if (tag != MethodTag::raw_knn) m.q = params.q;
  m.gamma = params.gamma;
  m.alpha = params.alpha;
  m.epsilon = params.epsilon;
  m.missing_classes = policy;
  return m;
}

KernelSpec kernel_for(const KernelSpec& base, const HyperParams& params) {
  if (base.family == KernelSpec::Family::linear) return base;
  if (base.bandwidth) return KernelSpec::rbf(*base.bandwidth * params.bandwidth_scale);
  return KernelSpec::median(base.median_scale * params.bandwidth_scale);
}

std::vector<int> FittedMethod::predict(const Matrix& features, CrossCentering mode) const {
  return knn_predict(train_embedding, train_labels, project(model, features, mode), params.k);
}

FittedMethod fit_with(MethodTag tag, const HyperParams& params, const LabeledDataset& train,
                      const SearchSettings& settings) {
  FittedMethod out;
  out.tag = tag;
  out.params = params;
  out.train_labels = train.labels;
  if (tag == MethodTag::raw_knn) {
    train.validate();
    out.model = ProjectionModel::identity(train.dimension());
    out.train_embedding = train.features;
    return out;
  }
  const KernelFit prepared = KernelFit::build(train, kernel_for(settings.kernel, params), settings.missing_classes);
  out.model = fit_method(method_for(tag, params, settings.missing_classes), prepared);
  out.train_embedding = project_training(out.model, prepared.centered);
  return out;
}

GridResult grid_search(const LabeledDataset& train, const LabeledDataset& validation, MethodTag tag,
                       const HyperGrid& grid, const SearchSettings& settings) {
  grid.validate();
  train.validate();
  validation.validate();
  const std::vector<Index> q_values = q_candidates(grid, train);
  const std::vector<HyperParams> points = grid_points(tag, grid, q_values);
  const Index n = train.size();
  const Index q_max = std::min(n, *std::max_element(q_values.begin(), q_values.end()));

  // The kernel fit depends only on the bandwidth, and one solve with the
  // largest q serves every smaller q, since the kept eigenpairs are the
  // leading ones.
  std::optional<double> kernel_key;
  std::optional<KernelFit> prepared;
  std::string kernel_error;
  std::optional<std::tuple<double, double, double, double>> model_key;
  Matrix train_embedding;
  Matrix val_embedding;
  std::string model_error;

  GridResult result;
  bool have_best = false;
  result.points.reserve(points.size());
  for (const HyperParams& p : points) {
    GridPoint point{p, std::nullopt, {}};
    try {
      if (tag == MethodTag::raw_knn) {
        train_embedding = train.features;
        val_embedding = validation.features;
      } else {
        if (kernel_key != p.bandwidth_scale) {
          kernel_key = p.bandwidth_scale;
          prepared.reset();
          kernel_error.clear();
          model_key.reset();
          try {
            prepared = KernelFit::build(train, kernel_for(settings.kernel, p), settings.missing_classes);
          } catch (const Error& e) {
            kernel_error = e.what();
          }
        }
        if (!prepared) throw Error(kernel_error);
        const auto key = std::make_tuple(p.bandwidth_scale, p.gamma, p.alpha, p.epsilon);
        if (model_key != key) {
          model_key = key;
          model_error.clear();
          train_embedding.resize(0, 0);
          try {
            HyperParams widest = p;
            widest.q = q_max;
            const ProjectionModel model = fit_method(method_for(tag, widest, settings.missing_classes), *prepared);
            train_embedding = project_training(model, prepared->centered);
            val_embedding = project(model, validation.features, settings.centering);
          } catch (const Error& e) {
            model_error = e.what();
          }
        }
        if (!model_error.empty()) throw Error(model_error);
        if (p.q > n) {
          throw Error("q = " + std::to_string(p.q) + " exceeds the number of training samples " + std::to_string(n));
        }
      }
      const Index dims = tag == MethodTag::raw_knn ? train_embedding.cols()
                                                   : std::min<Index>(p.q, train_embedding.cols());
      const auto predicted =
          knn_predict(train_embedding.leftCols(dims), train.labels, val_embedding.leftCols(dims), p.k);
      point.accuracy = accuracy(predicted, validation.labels);
    } catch (const Error& e) {
      point.failure = e.what();
    }
    if (point.accuracy && (!have_best || *point.accuracy > result.best_accuracy)) {
      have_best = true;
      result.best = p;
      result.best_accuracy = *point.accuracy;
    }
    result.points.push_back(std::move(point));
  }

  if (!have_best) {
    std::set<std::string> reasons;
    for (const auto& g : result.points) reasons.insert(g.failure);
    std::string message = "all " + std::to_string(result.points.size()) + " grid points failed for " + to_string(tag) + ":";
    for (const auto& r : reasons) message += " [" + r + "]";
    throw Error(message);
  }
  return result;
}

RepetitionFit fit_repetition(const ExperimentConfig& config, const LabeledDataset& data, int repetition) {
  std::vector<int> source_ids;
  for (const auto& name : config.source_domains) source_ids.push_back(data.domain_id(name));
  const LabeledDataset source = data.select_domains(source_ids);
  if (source.size() == 0) throw Error("source domains contain no rows");

  RepetitionFit fit;
  fit.repetition = repetition;
  fit.seed = config.seed + static_cast<std::uint64_t>(repetition);
  SplitResult outer = split(source, config.train_fraction, fit.seed);
  fit.train = std::move(outer.first);
  const SplitResult inner = split(fit.train, config.validation_fraction, Rng::derive({fit.seed, 1}));
  const LabeledDataset& validation = inner.first;
  const LabeledDataset& fitting = inner.second;

  std::vector<std::string> split_warnings;
  for (const auto* unsplit : std::array<const std::vector<GroupKey>*, 2>{&outer.unsplittable, &inner.unsplittable}) {
    for (const auto& key : *unsplit) {
      split_warnings.push_back("cell (domain " + data.domain_names[static_cast<std::size_t>(key.domain - 1)] +
                               ", class " + data.label_names[static_cast<std::size_t>(key.label - 1)] +
                               ") has one row and was not split");
    }
  }

  const SearchSettings settings{config.kernel, config.centering, config.missing_classes};
  for (MethodTag tag : config.methods) {
    MethodFit mf;
    try {
      mf.search = grid_search(fitting, validation, tag, config.grid, settings);
      mf.fitted = fit_with(tag, mf.search.best, fit.train, settings);
    } catch (const Error& e) {
      throw Error("repetition " + std::to_string(repetition) + ", method " + to_string(tag) + ": " + e.what());
    }
    mf.fitted.model.warnings.insert(mf.fitted.model.warnings.end(), split_warnings.begin(), split_warnings.end());
    fit.methods.push_back(std::move(mf));
  }
  return fit;
}

std::pair<double, double> mean_and_stddev(std::vector<double> values) {
  if (values.empty()) throw Error("no values to aggregate");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  std::vector<double> squares;
  for (double v : values) squares.push_back((v - mean) * (v - mean));
  std::sort(squares.begin(), squares.end());
  double sq = 0.0;
  for (double v : squares) sq += v;
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

const MethodResult& ResultRecord::method(MethodTag tag) const {
  for (const auto& m : methods) {
    if (m.tag == tag) return m;
  }
  throw Error("no results for method " + to_string(tag));
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_dataset(config.dataset));
}

ResultRecord run_experiment(const ExperimentConfig& config, const LabeledDataset& data) {
  config.validate();
  data.validate();
  std::vector<int> target_ids;
  for (const auto& name : config.target_domains) target_ids.push_back(data.domain_id(name));
  for (const auto& name : config.source_domains) data.domain_id(name);
  const LabeledDataset target = data.select_domains(target_ids);
  if (target.size() == 0) throw Error("target domains contain no rows");

  ResultRecord record;
  record.source_domains = config.source_domains;
  record.target_domains = config.target_domains;
  record.target_size = target.size();
  for (MethodTag tag : config.methods) record.methods.push_back({tag, {}, 0.0, 0.0});

  for (int r = 0; r < config.repetitions; ++r) {
    const RepetitionFit fit = fit_repetition(config, data, r);
    for (std::size_t i = 0; i < fit.methods.size(); ++i) {
      const MethodFit& mf = fit.methods[i];
      RepetitionResult run;
      run.repetition = r;
      run.seed = fit.seed;
      run.accuracy = accuracy(mf.fitted.predict(target.features, config.centering), target.labels);
      run.validation_accuracy = mf.search.best_accuracy;
      run.chosen = mf.search.best;
      run.dims = mf.fitted.train_embedding.cols();
      run.warnings = mf.fitted.model.warnings;
      record.methods[i].runs.push_back(std::move(run));
    }
  }
  for (auto& m : record.methods) {
    std::vector<double> acc;
    for (const auto& run : m.runs) acc.push_back(run.accuracy);
    std::tie(m.mean, m.stddev) = mean_and_stddev(acc);
  }
  return record;
}

void export_features(const ProjectionModel& model, const LabeledDataset& data, const std::filesystem::path& path,
                     CrossCentering mode) {
  data.validate();
  if (model.dims() < 2) {
    throw Error("model has " + std::to_string(model.dims()) +
                " learned coordinate(s); exporting plot data needs q >= 2");
  }
  const Matrix z = project(model, data.features, mode);
  LabeledDataset out = data;
  out.features = z.leftCols(2);
  out.feature_names = {"z1", "z2"};
  write_csv(out, path);
}

}  // namespace cidg
