#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "aflguard/data.hpp"
#include "aflguard/error.hpp"
#include "helpers.hpp"

using namespace aflguard;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

Dataset balanced(std::size_t per_class, std::size_t classes) {
  Dataset ds{TaskKind::classification, classes, {}};
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i)
      ds.examples.push_back({ParamVector{double(i), double(c)}, double(c)});
  return ds;
}

// Examples are identified by their (i, c) features.
std::set<std::pair<double, double>> ids(const Dataset& ds) {
  std::set<std::pair<double, double>> out;
  for (const auto& ex : ds.examples) out.insert({ex.features[0], ex.features[1]});
  return out;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("synthetic regression") {
    const auto a = gen_synthetic_regression(3, 10000, 100);
    CHECK(a.data.size() == 10000);
    CHECK(a.data.feature_dim() == 100);
    CHECK(a.true_model.dim() == 100);
    const auto b = gen_synthetic_regression(3, 10000, 100);
    CHECK(a.true_model == b.true_model);
    for (std::size_t i = 0; i < a.data.size(); i += 97) {
      CHECK(a.data.examples[i].features == b.data.examples[i].features);
      CHECK(a.data.examples[i].y == b.data.examples[i].y);
    }
    for (std::size_t j = 0; j < 100; ++j) {
      double m = 0;
      for (const auto& ex : a.data.examples) m += ex.features[j];
      CHECK(std::abs(m / 10000) <= 0.05);
    }
    // theta* entries have standard deviation 5.
    double ss = 0;
    for (double v : a.true_model) ss += v * v;
    CHECK(std::sqrt(ss / 100) == doctest::Approx(5.0).epsilon(0.25));
    CHECK_THROWS(gen_synthetic_regression(1, 0, 3));
  }

  TEST_CASE("split") {
    const auto r = gen_synthetic_regression(4, 10000, 3);
    const auto s = split_train_test(r.data, 8000, 1);
    CHECK(s.train.size() == 8000);
    CHECK(s.test.size() == 2000);
    CHECK(split_train_test(r.data, 9999, 1).test.size() == 1);
    CHECK_THROWS(split_train_test(r.data, 0, 1));
    CHECK_THROWS(split_train_test(r.data, 10000, 1));

    const auto ds = balanced(50, 4);
    const auto p = split_train_test(ds, 150, 7);
    auto train = ids(p.train), test = ids(p.test);
    CHECK(train.size() + test.size() == 200);
    for (const auto& t : test) CHECK(!train.contains(t));
    CHECK(ids(split_train_test(ds, 150, 7).test) == test);
    CHECK(ids(split_train_test(ds, 150, 8).test) != test);
  }

  TEST_CASE("iid partition") {
    const auto r = gen_synthetic_regression(5, 8000, 2);
    const auto parts = partition(r.data, {100, PartitionMode::iid, 0.5}, 1);
    REQUIRE(parts.size() == 100);
    for (const auto& p : parts) CHECK(p.size() == 80);
    const auto uneven = partition(balanced(25, 3), {7, PartitionMode::iid, 0.5}, 2);
    std::size_t lo = 1000, hi = 0, total = 0;
    std::set<std::pair<double, double>> seen;
    for (const auto& p : uneven) {
      lo = std::min(lo, p.size()), hi = std::max(hi, p.size()), total += p.size();
      for (const auto& id : ids(p)) CHECK(seen.insert(id).second);
    }
    CHECK(hi - lo <= 1);
    CHECK(total == 75);
  }

  TEST_CASE("noniid partition") {
    const std::size_t C = 6, n = 30;
    const auto ds = balanced(2000, C);

    // q = 1/C: group membership independent of the label.
    const auto parts = partition(ds, {n, PartitionMode::noniid, 1.0 / C}, 3);
    std::vector<std::vector<double>> table(C, std::vector<double>(C, 0.0));
    std::size_t total = 0;
    for (std::size_t client = 0; client < n; ++client) {
      const std::size_t g = client / (n / C);
      CHECK(noniid_group_of(client, n, C) == g);
      for (const auto& ex : parts[client].examples) table[std::size_t(ex.y)][g] += 1, ++total;
    }
    CHECK(total == ds.size());
    double stat = 0;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t g = 0; g < C; ++g) {
        const double e = 2000.0 / C;
        stat += (table[c][g] - e) * (table[c][g] - e) / e;
      }
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(C * (C - 1)), stat));
    CHECK(p > 0.01);

    const auto pure = partition(ds, {n, PartitionMode::noniid, 1.0}, 3);
    for (std::size_t client = 0; client < n; ++client)
      for (const auto& ex : pure[client].examples) CHECK(std::size_t(ex.y) == client / (n / C));

    const auto r = gen_synthetic_regression(1, 100, 2);
    CHECK_THROWS(partition(r.data, {10, PartitionMode::noniid, 0.5}, 1));
    CHECK_THROWS(partition(ds, {n, PartitionMode::noniid, 0.1}, 1));
  }

  TEST_CASE("trusted set") {
    const auto ten = balanced(50, 10);
    const auto t = sample_trusted(ten, {100, 0.1}, 1);
    CHECK(t.size() == 100);
    CHECK(std::count_if(t.examples.begin(), t.examples.end(), [](const Example& e) { return e.y == 0; }) == 10);
    CHECK(ids(t).size() == 100);
    const auto all0 = sample_trusted(ten, {50, 1.0}, 1);
    CHECK(std::all_of(all0.examples.begin(), all0.examples.end(), [](const Example& e) { return e.y == 0; }));
    CHECK_THROWS(sample_trusted(ten, {100, 1.0}, 1));
    const auto r = gen_synthetic_regression(2, 500, 2);
    CHECK(sample_trusted(r.data, {100, 0.9}, 1).size() == 100);
  }

  TEST_CASE("minibatch") {
    const auto ds = balanced(10, 2);
    Rng a(5), b(5);
    const auto whole = minibatch(ds, 20, a);
    CHECK(ids(Dataset{ds.kind, 2, whole}) == ids(ds));
    (void)minibatch(ds, 20, b);
    CHECK(ids(Dataset{ds.kind, 2, minibatch(ds, 16, a)}) == ids(Dataset{ds.kind, 2, minibatch(ds, 16, b)}));
    CHECK(minibatch(ds, 16, a).size() == 16);
    CHECK_THROWS(minibatch(ds, 21, a));
    CHECK_THROWS(minibatch(ds, 0, a));
  }

  TEST_CASE("csv") {
    TempDir dir("aflguard_unit_csv");
    {
      std::ofstream f(dir.path / "three.csv");
      f << "# kind=classification classes=3\n0.5,1,0\n-2,3.25,2\n1e-3,4,1\n";
    }
    const auto three = load_csv(dir.path / "three.csv");
    CHECK(three.size() == 3);
    CHECK(three.kind == TaskKind::classification);
    CHECK(three.examples[1].features == ParamVector{-2, 3.25});

    {
      std::ofstream f(dir.path / "ragged.csv");
      f << "# kind=regression\n1,2,3\n4,5,6\n7,8\n";
    }
    try {
      load_csv(dir.path / "ragged.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("ragged.csv:4") != std::string::npos);
    }
    {
      std::ofstream f(dir.path / "label.csv");
      f << "# kind=classification classes=2\n1,2\n1,5\n";
    }
    CHECK_THROWS_AS(load_csv(dir.path / "label.csv"), ParseError);
    CHECK_THROWS(load_csv(dir.path / "missing.csv"));

    const auto r = gen_synthetic_regression(6, 40, 5);
    save_csv(r.data, dir.path / "rt.csv");
    const auto back = load_csv(dir.path / "rt.csv");
    REQUIRE(back.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) {
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(back.examples[i].features[j] == doctest::Approx(r.data.examples[i].features[j]).epsilon(1e-9));
      CHECK(back.examples[i].y == doctest::Approx(r.data.examples[i].y).epsilon(1e-9));
    }
  }
}
