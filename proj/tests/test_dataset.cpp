#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "cidg/dataset.hpp"
#include "cidg/random.hpp"
#include "generators.hpp"

using namespace cidg;

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

using Row = std::tuple<std::vector<double>, int, int>;

std::multiset<Row> rows_of(const LabeledDataset& d) {
  std::multiset<Row> out;
  for (Index i = 0; i < d.size(); ++i) {
    std::vector<double> f(d.features.row(i).begin(), d.features.row(i).end());
    out.insert({f, d.labels[static_cast<std::size_t>(i)], d.domains[static_cast<std::size_t>(i)]});
  }
  return out;
}

}  // namespace

TEST_CASE("load_csv parses a minimal file and remaps ids") {
  gen::TempDir dir("csv");
  write_file(dir / "a.csv", "f1,f2,label,domain\n0.5,1,a,d1\n2,3,b,d1\n-1,4e-1,a,d2\n");
  const LabeledDataset d = load_csv(dir / "a.csv");
  CHECK(d.size() == 3);
  CHECK(d.dimension() == 2);
  CHECK(d.num_classes() == 2);
  CHECK(d.num_domains() == 2);
  CHECK(d.labels == std::vector<int>{1, 2, 1});
  CHECK(d.domains == std::vector<int>{1, 1, 2});
  CHECK(d.label_names == std::vector<std::string>{"a", "b"});
  CHECK(d.domain_names == std::vector<std::string>{"d1", "d2"});
  CHECK(d.features(2, 1) == 0.4);
}

TEST_CASE("load_csv orders integer names numerically, others lexically") {
  gen::TempDir dir("csv");
  write_file(dir / "a.csv", "x;cls;dom\n1;10;b\n2;9;a\n3;10;c\n");
  CsvSchema schema;
  schema.label_column = "cls";
  schema.domain_column = "dom";
  schema.delimiter = ';';
  const LabeledDataset d = load_csv(dir / "a.csv", schema);
  CHECK(d.label_names == std::vector<std::string>{"9", "10"});
  CHECK(d.labels == std::vector<int>{2, 1, 2});
  CHECK(d.domain_names == std::vector<std::string>{"a", "b", "c"});
  CHECK(d.domain_id("c") == 3);
  CHECK_THROWS_AS(d.domain_id("z"), Error);
}

TEST_CASE("load_csv handles quotes, a byte-order mark and explicit feature columns") {
  gen::TempDir dir("csv");
  write_file(dir / "a.csv", "\xEF\xBB\xBF\"f,1\",junk,label,domain\n1.5,skip,\"x, y\",s\n2.5,skip,z,s\n");
  CsvSchema schema;
  schema.feature_columns = {"f,1"};
  const LabeledDataset d = load_csv(dir / "a.csv", schema);
  CHECK(d.dimension() == 1);
  CHECK(d.label_names == std::vector<std::string>{"x, y", "z"});
}

TEST_CASE("load_csv reports the failing location") {
  gen::TempDir dir("csv");
  SUBCASE("NaN feature") {
    write_file(dir / "a.csv", "f1,f2,label,domain\n1,2,a,d\n1,nan,a,d\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "a.csv"), doctest::Contains(":3: column 'f2'"), Error);
  }
  SUBCASE("non-numeric feature") {
    write_file(dir / "a.csv", "f1,label,domain\nabc,a,d\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "a.csv"), doctest::Contains("'f1'"), Error);
  }
  SUBCASE("empty label") {
    write_file(dir / "a.csv", "f1,label,domain\n1,,d\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "a.csv"), doctest::Contains("empty label"), Error);
  }
  SUBCASE("ragged row") {
    write_file(dir / "a.csv", "f1,label,domain\n1,a\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "a.csv"), doctest::Contains(":2:"), Error);
  }
  SUBCASE("missing column") {
    write_file(dir / "a.csv", "f1,cls,domain\n1,a,d\n");
    CHECK_THROWS_WITH_AS(load_csv(dir / "a.csv"), doctest::Contains("'label'"), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_csv(dir / "absent.csv"), doctest::Contains("absent.csv"), Error);
  }
}

TEST_CASE("synthetic benchmark has the tabulated sizes") {
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  CHECK(d.size() == (30 + 20 + 30) + (20 + 60 + 40) + (40 + 40 + 40));
  CHECK(d.num_domains() == 3);
  CHECK(d.num_classes() == 3);
  const GroupIndex g = group_index(d);
  CHECK(g.count(2, 2) == 60);
  CHECK(g.count(1, 2) == 20);
  CHECK(g.per_domain.at(3) == 120);
}

TEST_CASE("synthetic cells match their means for any seed") {
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 12345ull, 99999ull}) {
    const SyntheticSpec spec = SyntheticSpec::three_domain_benchmark(seed);
    const LabeledDataset d = generate_synthetic(spec);
    const GroupIndex g = group_index(d);
    for (const auto& c : spec.cells) {
      const auto& rows = g.index_of.at({c.domain, c.label});
      REQUIRE(static_cast<Index>(rows.size()) == c.count);
      double mx = 0.0;
      double my = 0.0;
      for (Index r : rows) {
        mx += d.features(r, 0);
        my += d.features(r, 1);
      }
      mx /= static_cast<double>(c.count);
      my /= static_cast<double>(c.count);
      const double root = std::sqrt(static_cast<double>(c.count));
      CHECK(std::abs(mx - c.mean_x) <= 4.0 * c.std_x / root);
      CHECK(std::abs(my - c.mean_y) <= 4.0 * c.std_y / root);
    }
  }
  // domain 1 class 1 at the tighter three-standard-error bound, seed 0
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  const std::vector<Index> rows = group_index(d).index_of.at({1, 1});
  double mx = 0.0;
  double my = 0.0;
  for (Index r : rows) {
    mx += d.features(r, 0) / 30.0;
    my += d.features(r, 1) / 30.0;
  }
  CHECK(std::abs(mx - 1.0) <= 3.0 * 0.3 / std::sqrt(30.0));
  CHECK(std::abs(my - 2.0) <= 3.0 * 0.3 / std::sqrt(30.0));
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = generate_synthetic(SyntheticSpec::three_domain_benchmark(3));
  const auto b = generate_synthetic(SyntheticSpec::three_domain_benchmark(3));
  const auto c = generate_synthetic(SyntheticSpec::three_domain_benchmark(4));
  CHECK(a == b);
  CHECK_FALSE(a.features == c.features);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec = SyntheticSpec::three_domain_benchmark();
  spec.cells[0].std_x = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SyntheticSpec::three_domain_benchmark();
  spec.cells[4].count = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SyntheticSpec::three_domain_benchmark();
  spec.cells.push_back(spec.cells[0]);
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = SyntheticSpec::three_domain_benchmark();
  spec.cells[8].label = 5;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("benchmark survives a CSV round trip") {
  gen::TempDir dir("csv");
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(11));
  write_csv(d, dir / "bench.csv");
  const LabeledDataset back = load_csv(dir / "bench.csv");
  CHECK(back == d);

  // a 70% training side round-trips as well
  const LabeledDataset part = split(d, 0.7, 5).first;
  write_csv(part, dir / "part.csv");
  const LabeledDataset back_part = load_csv(dir / "part.csv");
  CHECK(back_part.features == part.features);
  CHECK(back_part.labels == part.labels);
  CHECK(back_part.domains == part.domains);
}

TEST_CASE("split is exactly stratified") {
  LabeledDataset d;
  d.features.resize(40, 1);
  for (int i = 0; i < 40; ++i) {
    d.features(i, 0) = i;
    d.labels.push_back(1 + i % 2);
    d.domains.push_back(1 + (i / 2) % 2);
  }
  d.feature_names = {"f"};
  d.label_names = {"1", "2"};
  d.domain_names = {"1", "2"};

  const SplitResult s = split(d, 0.7, 1);
  const GroupIndex first = group_index(s.first);
  for (int dom : {1, 2}) {
    for (int cls : {1, 2}) CHECK(first.count(dom, cls) == 7);
  }
  CHECK(s.second.size() == 12);
  CHECK(s.unsplittable.empty());
}

TEST_CASE("split rounding rule") {
  CHECK(split_first_count(10, 0.7) == 7);
  CHECK(split_first_count(20, 0.3) == 6);
  CHECK(split_first_count(60, 0.3) == 18);
  CHECK(split_first_count(14, 0.3) == 4);
  CHECK(split_first_count(3, 0.3) == 1);   // floor 0 raised to 1
  CHECK(split_first_count(2, 0.9) == 1);   // floor 1, capped at count - 1
  CHECK(split_first_count(5, 0.99) == 4);  // floor 4
  CHECK(split_first_count(1, 0.5) == 1);
}

TEST_CASE("validation split of the training side follows the rounding rule") {
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  const LabeledDataset train = split(d, 0.7, 0).first;
  const GroupIndex tg = group_index(train);
  const GroupIndex vg = group_index(split(train, 0.3, 9).first);
  for (const auto& [key, rows] : tg.index_of) {
    CHECK(vg.count(key.domain, key.label) == split_first_count(static_cast<Index>(rows.size()), 0.3));
  }
}

TEST_CASE("split seeds change the partition, not the profile") {
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  const SplitResult a = split(d, 0.7, 1);
  const SplitResult b = split(d, 0.7, 2);
  CHECK_FALSE(a.first.features == b.first.features);
  const GroupIndex ga = group_index(a.first);
  const GroupIndex gb = group_index(b.first);
  for (const auto& [key, rows] : ga.index_of) CHECK(gb.count(key.domain, key.label) == static_cast<Index>(rows.size()));
  CHECK(split(d, 0.7, 1).first == a.first);
}

TEST_CASE("single-row cells go to the first side and are flagged") {
  LabeledDataset d;
  d.features = Matrix::Zero(5, 1);
  for (int i = 0; i < 5; ++i) d.features(i, 0) = i;
  d.labels = {1, 1, 1, 1, 2};
  d.domains = {1, 1, 1, 1, 1};
  d.feature_names = {"f"};
  d.label_names = {"1", "2"};
  d.domain_names = {"1"};
  const SplitResult s = split(d, 0.5, 3);
  REQUIRE(s.unsplittable.size() == 1);
  CHECK(s.unsplittable[0] == GroupKey{1, 2});
  CHECK(group_index(s.first).count(1, 2) == 1);
  CHECK(s.second.size() == 2);
}

TEST_CASE("split rejects bad fractions") {
  const LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  CHECK_THROWS_AS(split(d, 0.0, 1), Error);
  CHECK_THROWS_AS(split(d, 1.0, 1), Error);
}

TEST_CASE("property: split then merge recovers the rows") {
  gen::Source rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const LabeledDataset d = gen::labeled(rng, rng.integer(1, 3), rng.integer(1, 3), rng.integer(12, 40), 2, 2);
    const double fraction = rng.uniform(0.1, 0.9);
    const SplitResult s = split(d, fraction, static_cast<std::uint64_t>(trial));
    std::multiset<Row> merged = rows_of(s.first);
    for (const auto& r : rows_of(s.second)) merged.insert(r);
    CHECK(merged == rows_of(d));
  }
}

TEST_CASE("group_index partitions the rows") {
  gen::Source rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const LabeledDataset d = gen::labeled(rng, rng.integer(1, 4), rng.integer(1, 4), rng.integer(16, 60), 2);
    const GroupIndex g = group_index(d);
    std::vector<Index> all;
    for (const auto& [key, rows] : g.index_of) {
      CHECK(std::is_sorted(rows.begin(), rows.end()));
      all.insert(all.end(), rows.begin(), rows.end());
    }
    std::sort(all.begin(), all.end());
    for (Index i = 0; i < d.size(); ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
    for (int dom : g.domain_ids) {
      Index sum = 0;
      for (int cls : g.class_ids) sum += g.count(dom, cls);
      CHECK(sum == g.per_domain.at(dom));
    }
    for (int cls : g.class_ids) {
      Index sum = 0;
      for (int dom : g.domain_ids) sum += g.count(dom, cls);
      CHECK(sum == g.per_class.at(cls));
    }
  }
}

TEST_CASE("group_index of one domain and one class is a single group") {
  LabeledDataset d;
  d.features = Matrix::Random(6, 2);
  d.labels.assign(6, 1);
  d.domains.assign(6, 1);
  d.feature_names = {"a", "b"};
  d.label_names = {"1"};
  d.domain_names = {"1"};
  const GroupIndex g = group_index(d);
  REQUIRE(g.index_of.size() == 1);
  CHECK(g.index_of.at({1, 1}) == std::vector<Index>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("property: grouping is permutation invariant") {
  gen::Source rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const LabeledDataset d = gen::labeled(rng, 2, 3, 30, 2);
    const LabeledDataset p = d.subset(rng.permutation(d.size()));
    const GroupIndex gd = group_index(d);
    const GroupIndex gp = group_index(p);
    REQUIRE(gd.index_of.size() == gp.index_of.size());
    for (const auto& [key, rows] : gd.index_of) {
      std::multiset<std::vector<double>> a;
      std::multiset<std::vector<double>> b;
      for (Index r : rows) a.insert({d.features(r, 0), d.features(r, 1)});
      for (Index r : gp.index_of.at(key)) b.insert({p.features(r, 0), p.features(r, 1)});
      CHECK(a == b);
    }
  }
}

TEST_CASE("validate rejects malformed datasets") {
  LabeledDataset d = generate_synthetic(SyntheticSpec::three_domain_benchmark(0));
  CHECK_NOTHROW(d.validate());
  LabeledDataset bad = d;
  bad.labels.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.domains[4] = 9;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.features(3, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rng primitives") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = r.below(5);
    REQUIRE(v < 5);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 800);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(Rng::derive({1, 2}) != Rng::derive({2, 1}));
}
