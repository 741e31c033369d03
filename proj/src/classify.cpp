#include "cidg/classify.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace cidg {

std::vector<int> knn_predict(const Matrix& train_features, const std::vector<int>& train_labels,
                             const Matrix& test_features, Index k) {
  const Index n = train_features.rows();
  if (n == 0) throw Error("KNN needs a non-empty training set");
  if (static_cast<Index>(train_labels.size()) != n) throw Error("KNN training labels and features differ in length");
  if (k < 1) throw Error("KNN needs k >= 1");
  if (k > n) throw Error("KNN k = " + std::to_string(k) + " exceeds the training size " + std::to_string(n));
  if (train_features.cols() != test_features.cols()) throw Error("KNN train and test dimensions differ");

  std::vector<int> predicted(static_cast<std::size_t>(test_features.rows()));
  std::vector<std::pair<double, Index>> neighbours(static_cast<std::size_t>(n));
  for (Index t = 0; t < test_features.rows(); ++t) {
    for (Index i = 0; i < n; ++i) {
      neighbours[static_cast<std::size_t>(i)] = {(train_features.row(i) - test_features.row(t)).norm(), i};
    }
    std::partial_sort(neighbours.begin(), neighbours.begin() + k, neighbours.end());

    // class -> (votes, summed distance); std::map keeps class ids ascending
    std::map<int, std::pair<Index, double>> tally;
    for (Index r = 0; r < k; ++r) {
      const auto& [distance, row] = neighbours[static_cast<std::size_t>(r)];
      auto& entry = tally[train_labels[static_cast<std::size_t>(row)]];
      ++entry.first;
      entry.second += distance;
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
      const bool more_votes = it->second.first > best->second.first;
      const bool closer = it->second.first == best->second.first && it->second.second < best->second.second;
      if (more_votes || closer) best = it;
    }
    predicted[static_cast<std::size_t>(t)] = best->first;
  }
  return predicted;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw Error("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error("accuracy of an empty label sequence");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::string to_string(MethodTag tag) {
  switch (tag) {
    case MethodTag::raw_knn: return "raw_knn";
    case MethodTag::kpca: return "kpca";
    case MethodTag::dica_marginal: return "dica_marginal";
    case MethodTag::kfda: return "kfda";
    case MethodTag::cidg: return "cidg";
  }
  return "unknown";
}

MethodTag method_from_string(const std::string& name) {
  for (MethodTag tag : {MethodTag::raw_knn, MethodTag::kpca, MethodTag::dica_marginal, MethodTag::kfda,
                        MethodTag::cidg}) {
    if (to_string(tag) == name) return tag;
  }
  throw Error("unknown method '" + name + "' (expected raw_knn, kpca, dica_marginal, kfda or cidg)");
}

SolverConfig Method::solver_config() const {
  SolverConfig config;
  config.gamma = tag == MethodTag::cidg ? gamma : 0.0;
  config.alpha = (tag == MethodTag::cidg || tag == MethodTag::dica_marginal) ? alpha : 0.0;
  config.epsilon = epsilon;
  config.relative_epsilon = relative_epsilon;
  config.q = q;
  return config;
}

KernelFit KernelFit::build(const LabeledDataset& train, const KernelSpec& spec, MissingClassPolicy policy) {
  train.validate();
  KernelFit fit;
  fit.kernel = resolve(spec, train.features);
  fit.features = train.features;
  const Matrix k = gram(train.features, train.features, fit.kernel);
  fit.stats = TrainKernelStats::of(k);
  fit.centered = center_train(k);
  fit.weights = build_weights(group_index(train), policy);
  fit.scatters = build_scatters(fit.centered, fit.weights);
  fit.marginal = marginal_scatter(fit.centered, fit.weights);
  fit.labels = train.labels;
  return fit;
}

ProjectionModel fit_method(const Method& method, const KernelFit& prepared) {
  if (method.tag == MethodTag::raw_knn) return ProjectionModel::identity(prepared.features.cols());

  SolverConfig config = method.solver_config();
  if (!config.q) {
    const Index n = prepared.centered.rows();
    const Index cm = static_cast<Index>(prepared.weights.class_ids.size()) * prepared.weights.num_domains();
    config.q = std::max<Index>(1, std::min(n - 1, cm));
  }
  ProjectionModel model;
  switch (method.tag) {
    case MethodTag::kpca: {
      const Index n = prepared.centered.rows();
      model = solve_pencil(prepared.centered, Matrix::Identity(n, n), config);
      break;
    }
    case MethodTag::kfda:
    case MethodTag::cidg:
      model = solve(prepared.scatters, config);
      break;
    case MethodTag::dica_marginal: {
      const ScatterSet marginal_set{Matrix::Zero(prepared.marginal.rows(), prepared.marginal.cols()),
                                    prepared.marginal, prepared.scatters.between, prepared.scatters.within};
      model = solve(marginal_set, config);
      break;
    }
    case MethodTag::raw_knn:
      break;
  }
  model.kind = ProjectionModel::Kind::kernel;
  model.kernel = prepared.kernel;
  model.training_features = prepared.features;
  model.train_stats = prepared.stats;
  for (const auto& note : prepared.weights.adjustments) model.warnings.push_back("lenient grouping: " + note);
  return model;
}

ProjectionModel fit_baseline(const Method& method, const LabeledDataset& train, const KernelSpec& spec) {
  if (method.tag == MethodTag::raw_knn) {
    train.validate();
    return ProjectionModel::identity(train.dimension());
  }
  return fit_method(method, KernelFit::build(train, spec, method.missing_classes));
}

}  // namespace cidg
