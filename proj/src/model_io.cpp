#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cidg/solver.hpp"

namespace cidg {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'I', 'D', 'G', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void string(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  void bytes(std::uint64_t v, int count) {
    for (int i = 0; i < count; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = f64();
    }
    return m;
  }
  std::string string() {
    const std::uint64_t size = u64();
    if (size > (1u << 20)) fail("implausible string length");
    std::string s(size, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(size));
    if (!in_) fail("truncated file");
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error(name_ + ": " + what); }

 private:
  std::uint64_t bytes(int count) {
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) {
      const int ch = in_.get();
      if (ch == EOF) fail("truncated file");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * i);
    }
    return v;
  }
  std::istream& in_;
  std::string name_;
};

}  // namespace

void save_model(const ProjectionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u32(model.kind == ProjectionModel::Kind::identity ? 1 : 0);
  w.u32(model.kernel.family == KernelSpec::Family::linear ? 1 : 0);
  w.u32(0);
  w.f64(model.kernel.bandwidth.value_or(0.0));
  w.f64(model.kernel.median_scale);
  w.f64(model.epsilon);
  w.f64(model.train_stats.grand_mean);

  const bool identity = model.kind == ProjectionModel::Kind::identity;
  const Index n = identity ? 0 : model.training_features.rows();
  const Index d = model.training_features.cols();
  const Index q = identity ? 0 : model.coefficients.cols();
  w.u64(static_cast<std::uint64_t>(n));
  w.u64(static_cast<std::uint64_t>(d));
  w.u64(static_cast<std::uint64_t>(q));
  if (!identity) {
    w.matrix(model.training_features);
    w.matrix(model.coefficients);
    w.matrix(model.eigenvalues);
    w.matrix(model.train_stats.row_means);
  }
  w.u64(model.warnings.size());
  for (const auto& s : model.warnings) w.string(s);
  if (!out) throw Error("failed writing model file '" + path.string() + "'");
}

ProjectionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  Reader r(in, path.string());

  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) r.fail("not a model file");
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported model version " + std::to_string(version));

  ProjectionModel model;
  const std::uint32_t kind = r.u32();
  const std::uint32_t family = r.u32();
  if (kind > 1 || family > 1) r.fail("corrupt header");
  r.u32();
  model.kind = kind == 1 ? ProjectionModel::Kind::identity : ProjectionModel::Kind::kernel;
  model.kernel.family = family == 1 ? KernelSpec::Family::linear : KernelSpec::Family::rbf;
  const double bandwidth = r.f64();
  if (model.kernel.family == KernelSpec::Family::rbf && model.kind == ProjectionModel::Kind::kernel) {
    model.kernel.bandwidth = bandwidth;
  }
  model.kernel.median_scale = r.f64();
  model.epsilon = r.f64();
  model.train_stats.grand_mean = r.f64();

  const auto n = static_cast<Index>(r.u64());
  const auto d = static_cast<Index>(r.u64());
  const auto q = static_cast<Index>(r.u64());
  if (n < 0 || d < 0 || q < 0 || n > (1 << 20) || d > (1 << 20) || q > n) r.fail("implausible dimensions");
  model.training_features = r.matrix(n, d);
  model.coefficients = r.matrix(n, q);
  model.eigenvalues = r.matrix(q, 1);
  model.train_stats.row_means = r.matrix(n, 1);
  const std::uint64_t warnings = r.u64();
  if (warnings > 4096) r.fail("implausible warning count");
  for (std::uint64_t i = 0; i < warnings; ++i) model.warnings.push_back(r.string());
  if (in.peek() != EOF) r.fail("trailing bytes");
  return model;
}

}  // namespace cidg
