#include <doctest.h>

#include <fstream>

#include "cidg/classify.hpp"
#include "cidg/dataset.hpp"
#include "cidg/solver.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace cidg;

namespace {

/// Random PSD scatter set; rank-deficient pieces keep the pencil honest.
ScatterSet random_scatters(gen::Source& rng, Index n) {
  auto psd = [&](Index rank) {
    const Matrix f = rng.matrix(n, rank);
    return Matrix(f * f.transpose());
  };
  return {psd(rng.integer(1, static_cast<int>(n))), psd(rng.integer(1, static_cast<int>(n))),
          psd(rng.integer(1, static_cast<int>(n))), psd(rng.integer(1, static_cast<int>(n)))};
}

void check_pencil(const ScatterSet& s, const SolverConfig& config, const ProjectionModel& model) {
  const Matrix d = denominator(s, config.gamma, config.alpha, model.epsilon);
  const Matrix& b = model.coefficients;
  for (Index c = 0; c < b.cols(); ++c) {
    CHECK(oracle::residual(s.between, d, b.col(c), model.eigenvalues(c)) <= 1e-6);
    CHECK(model.eigenvalues(c) > 0.0);
    if (c > 0) CHECK(model.eigenvalues(c) <= model.eigenvalues(c - 1));
  }
  const Matrix gram = b.transpose() * d * b;
  CHECK((gram - Matrix::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() <= 1e-6);
}

struct Fitted {
  LabeledDataset train;
  KernelFit prepared;
  ProjectionModel model;
};

Fitted fit_benchmark(std::uint64_t seed) {
  const LabeledDataset all = generate_synthetic(SyntheticSpec::three_domain_benchmark(seed));
  Fitted f;
  f.train = all.select_domains({1, 2});
  f.prepared = KernelFit::build(f.train, KernelSpec::median());
  Method m;
  m.q = 4;
  m.gamma = 0.1;
  m.alpha = 10.0;
  f.model = fit_method(m, f.prepared);
  return f;
}

}  // namespace

TEST_CASE("diagonal pencil") {
  ScatterSet s{Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  s.between(0, 0) = 2.0;
  const ProjectionModel model = solve_pencil(s.between, Matrix::Identity(2, 2), SolverConfig{});
  REQUIRE(model.dims() == 1);  // the zero eigenvalue is discarded
  CHECK(model.eigenvalues(0) == doctest::Approx(2.0));
  CHECK(model.coefficients(0, 0) == doctest::Approx(1.0));
  CHECK(model.coefficients(1, 0) == doctest::Approx(0.0));
  CHECK(model.warnings.empty());

  SolverConfig two;
  two.q = 2;
  const ProjectionModel truncated = solve_pencil(s.between, Matrix::Identity(2, 2), two);
  CHECK(truncated.dims() == 1);
  REQUIRE(truncated.warnings.size() == 1);
  CHECK(truncated.warnings[0].find("truncated from 2 to 1") != std::string::npos);
}

TEST_CASE("isotropic pencil") {
  const Index n = 5;
  SolverConfig config;
  config.gamma = 0.0;
  config.alpha = 0.0;
  config.relative_epsilon = false;
  const double eps = config.epsilon;
  // Q = (1 - eps) I so that D = I
  const ScatterSet s{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Identity(n, n),
                     (1.0 - eps) * Matrix::Identity(n, n)};
  const ProjectionModel model = solve(s, config);
  REQUIRE(model.dims() == n);
  for (Index c = 0; c < n; ++c) CHECK(model.eigenvalues(c) == doctest::Approx(1.0).epsilon(1e-12));
  check_pencil(s, config, model);
}

TEST_CASE("property: random pencils satisfy the residual and normalization bounds") {
  gen::Source rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = rng.integer(2, 20);
    const ScatterSet s = random_scatters(rng, n);
    SolverConfig config;
    config.gamma = std::pow(10.0, rng.uniform(-3, 3));
    config.alpha = std::pow(10.0, rng.uniform(-3, 3));
    config.epsilon = std::pow(10.0, rng.uniform(-6, -2));
    const ProjectionModel model = solve(s, config);
    check_pencil(s, config, model);

    // the Rayleigh quotient ignores column scale; the tolerance is relative,
    // widened by the cancellation in each quadratic form
    const Matrix d = denominator(s, config.gamma, config.alpha, model.epsilon);
    const Vector b = model.coefficients.col(0);
    const Vector ab = b.cwiseAbs();
    const double num = b.dot(s.between * b);
    const double den = b.dot(d * b);
    const double quotient = num / den;
    const double cancellation = ab.dot(s.between.cwiseAbs() * ab) / num + ab.dot(d.cwiseAbs() * ab) / den;
    const double magnitude = quotient * std::max(1.0, cancellation);
    const double eta = rng.uniform(-50, 50);
    const Vector scaled = eta * b;
    CHECK(std::abs(scaled.dot(s.between * scaled) / scaled.dot(d * scaled) - quotient) <= 1e-10 * magnitude);
  }
}

TEST_CASE("rounding-level eigenvalues are not returned") {
  // a linear kernel with C classes gives a between-class scatter of rank C - 1
  gen::Source rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int classes = rng.integer(2, 4);
    const LabeledDataset d = gen::labeled(rng, 2, classes, 40, 5, 2);
    const Matrix k = center_train(gram(d.features, d.features, KernelSpec::linear()));
    const ScatterSet s = build_scatters(k, build_weights(group_index(d)));
    SolverConfig config;
    config.gamma = rng.uniform(0.01, 100);
    config.alpha = rng.uniform(0.01, 100);
    config.epsilon = 1e-8;
    const ProjectionModel model = solve(s, config);
    CHECK(model.dims() == classes - 1);
    const Matrix dm = denominator(s, config.gamma, config.alpha, model.epsilon);
    for (Index c = 0; c < model.dims(); ++c) {
      CHECK(oracle::residual(s.between, dm, model.coefficients.col(c), model.eigenvalues(c)) <= 1e-6);
    }
  }
}

TEST_CASE("benchmark pencil satisfies the residual bound") {
  const Fitted f = fit_benchmark(0);
  SolverConfig config;
  config.gamma = 0.1;
  config.alpha = 10.0;
  check_pencil(f.prepared.scatters, config, f.model);
  CHECK(f.model.epsilon == doctest::Approx(1e-5 * f.prepared.scatters.within.diagonal().mean()));
}

TEST_CASE("columns are sign canonical and deterministic") {
  gen::Source rng(12);
  const ScatterSet s = random_scatters(rng, 9);
  const ProjectionModel a = solve(s, SolverConfig{});
  const ProjectionModel b = solve(s, SolverConfig{});
  CHECK(a.coefficients == b.coefficients);
  for (Index c = 0; c < a.dims(); ++c) {
    Index pivot = 0;
    a.coefficients.col(c).cwiseAbs().maxCoeff(&pivot);
    CHECK(a.coefficients(pivot, c) > 0.0);
  }
}

TEST_CASE("solver errors") {
  gen::Source rng(13);
  const ScatterSet s = random_scatters(rng, 4);
  SolverConfig config;
  config.q = 5;
  CHECK_THROWS_WITH_AS(solve(s, config), doctest::Contains("exceeds"), Error);

  ScatterSet bad = s;
  bad.within(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve(bad, SolverConfig{}), Error);

  CHECK_THROWS_AS(solve_pencil(Matrix::Identity(3, 3), -Matrix::Identity(3, 3), SolverConfig{}), Error);
  CHECK_THROWS_WITH_AS(solve_pencil(Matrix::Zero(3, 3), Matrix::Identity(3, 3), SolverConfig{}),
                       doctest::Contains("no positive eigenvalues"), Error);

  SolverConfig negative;
  negative.gamma = -1.0;
  CHECK_THROWS_AS(negative.validate(), Error);
  SolverConfig zero_eps;
  zero_eps.epsilon = 0.0;
  CHECK_THROWS_AS(zero_eps.validate(), Error);
}

TEST_CASE("projecting the training set reproduces the training-side embedding") {
  const Fitted f = fit_benchmark(1);
  const Matrix direct = project_training(f.model, f.prepared.centered);
  const Matrix via_project = project(f.model, f.train.features, CrossCentering::paper);
  CHECK((direct - via_project).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
  const Matrix standard = project(f.model, f.train.features, CrossCentering::standard);
  CHECK((direct - standard).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
}

TEST_CASE("duplicated target rows project identically") {
  const Fitted f = fit_benchmark(2);
  const LabeledDataset all = generate_synthetic(SyntheticSpec::three_domain_benchmark(2));
  const Matrix target = all.select_domains({3}).features;
  Matrix doubled(target.rows() + 1, 2);
  doubled.topRows(target.rows()) = target;
  doubled.row(target.rows()) = target.row(5);
  for (CrossCentering mode : {CrossCentering::paper, CrossCentering::standard}) {
    const Matrix z = project(f.model, doubled, mode);
    CHECK(z.row(5) == z.row(target.rows()));
  }
  // standard mode treats rows independently
  const Matrix z = project(f.model, target, CrossCentering::standard);
  const Matrix one = project(f.model, target.row(7), CrossCentering::standard);
  CHECK((z.row(7) - one.row(0)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("target projection matches an end-to-end recomputation") {
  const Fitted f = fit_benchmark(3);
  const LabeledDataset all = generate_synthetic(SyntheticSpec::three_domain_benchmark(3));
  const Matrix target = all.select_domains({3}).features;
  const double sigma = *f.model.kernel.bandwidth;
  CHECK(sigma == oracle::pairwise_median(f.train.features));

  const Matrix kt = oracle::rbf_gram(f.train.features, target, sigma);
  const Matrix k = oracle::rbf_gram(f.train.features, f.train.features, sigma);
  const Matrix scale = f.model.eigenvalues.array().rsqrt().matrix().asDiagonal();
  const Matrix paper = oracle::center_cross_paper(kt).transpose() * f.model.coefficients * scale;
  const Matrix standard = oracle::center_cross_standard(kt, k).transpose() * f.model.coefficients * scale;
  const double tol = 1e-9 * std::max(1.0, paper.cwiseAbs().maxCoeff());
  CHECK((project(f.model, target, CrossCentering::paper) - paper).cwiseAbs().maxCoeff() <= tol);
  CHECK((project(f.model, target, CrossCentering::standard) - standard).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("project rejects a dimension mismatch") {
  const Fitted f = fit_benchmark(4);
  CHECK_THROWS_AS(project(f.model, Matrix::Zero(3, 3)), Error);
  CHECK_THROWS_AS(project(ProjectionModel::identity(2), Matrix::Zero(3, 3)), Error);
  CHECK(project(ProjectionModel::identity(2), Matrix::Ones(3, 2)) == Matrix::Ones(3, 2));
}

TEST_CASE("model files round-trip") {
  gen::TempDir dir("model");
  Fitted f = fit_benchmark(5);
  f.model.warnings = {"first note", "second, longer note"};
  save_model(f.model, dir / "m.model");
  const ProjectionModel back = load_model(dir / "m.model");
  CHECK(back.kind == f.model.kind);
  CHECK(back.kernel == f.model.kernel);
  CHECK(back.coefficients == f.model.coefficients);
  CHECK(back.eigenvalues == f.model.eigenvalues);
  CHECK(back.training_features == f.model.training_features);
  CHECK(back.train_stats.row_means == f.model.train_stats.row_means);
  CHECK(back.train_stats.grand_mean == f.model.train_stats.grand_mean);
  CHECK(back.epsilon == f.model.epsilon);
  CHECK(back.warnings == f.model.warnings);
  const Matrix target = generate_synthetic(SyntheticSpec::three_domain_benchmark(5)).select_domains({3}).features;
  CHECK(project(back, target) == project(f.model, target));
  CHECK(project(back, target, CrossCentering::standard) == project(f.model, target, CrossCentering::standard));

  save_model(ProjectionModel::identity(3), dir / "id.model");
  const ProjectionModel id = load_model(dir / "id.model");
  CHECK(id.kind == ProjectionModel::Kind::identity);
  CHECK(id.input_dimension() == 3);
}

TEST_CASE("corrupt model files are rejected") {
  gen::TempDir dir("model");
  const Fitted f = fit_benchmark(6);
  save_model(f.model, dir / "m.model");
  std::ifstream in(dir / "m.model", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  CHECK_THROWS_WITH_AS(load_model(write("t.model", bytes.substr(0, bytes.size() - 3))),
                       doctest::Contains("truncated"), Error);
  CHECK_THROWS_WITH_AS(load_model(write("x.model", bytes + "x")), doctest::Contains("trailing"), Error);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(load_model(write("g.model", magic)), doctest::Contains("not a model"), Error);
  std::string version = bytes;
  version[8] = 9;
  CHECK_THROWS_WITH_AS(load_model(write("v.model", version)), doctest::Contains("version"), Error);
  CHECK_THROWS_AS(load_model(dir / "absent.model"), Error);
}
