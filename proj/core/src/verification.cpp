#include "aflguard/verification.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "aflguard/attacks.hpp"
#include "aflguard/data.hpp"
#include "aflguard/defenses.hpp"
#include "aflguard/engine.hpp"
#include "aflguard/error.hpp"
#include "aflguard/metrics.hpp"
#include "aflguard/tasks.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard::verify {

namespace {

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

class Suite {
 public:
  void expect(std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }

  // Runs f; a thrown exception is a failed check.
  template <class F>
  void guarded(std::string name, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      expect(std::move(name), false, std::string("threw: ") + e.what());
    }
  }

  template <class E, class F>
  void expect_throws(std::string name, F&& f) {
    try {
      f();
      expect(std::move(name), false, "no exception");
    } catch (const E&) {
      expect(std::move(name), true);
    } catch (const std::exception& e) {
      expect(std::move(name), false, std::string("wrong exception: ") + e.what());
    }
  }

  std::vector<Check> checks;
};

bool close(double a, double b, double rel, double abs = 0.0) {
  return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

bool vec_close(const ParamVector& a, const ParamVector& b, double rel) {
  if (a.dim() != b.dim()) return false;
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return std::sqrt(diff) <= rel * std::max(scale, 1e-300);
}

ParamVector random_vector(std::size_t dim, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  ParamVector v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

Dataset random_regression(std::size_t n, std::size_t dim, Rng& rng) {
  Dataset ds;
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) ds.examples.push_back({random_vector(dim, rng), normal(rng)});
  return ds;
}

Dataset random_classification(std::size_t n, std::size_t dim, std::size_t classes, Rng& rng) {
  Dataset ds{TaskKind::classification, classes, {}};
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.examples.push_back({random_vector(dim, rng), static_cast<double>(label(rng))});
  }
  return ds;
}

// Central differences of a scalar loss; the oracle for both gradients.
template <class Loss>
ParamVector finite_difference(const ParamVector& at, Loss&& loss, double h = 1e-6) {
  ParamVector g(at.dim());
  ParamVector probe = at;
  for (std::size_t i = 0; i < at.dim(); ++i) {
    const double x = probe[i];
    probe[i] = x + h;
    const double up = loss(probe);
    probe[i] = x - h;
    const double down = loss(probe);
    probe[i] = x;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double rel_error(const ParamVector& got, const ParamVector& want) {
  return l2norm(got - want) / std::max(l2norm(want), 1e-12);
}

// ---------------------------------------------------------------- vecmath

std::vector<Check> vecmath_checks() {
  Suite s;
  Rng rng(11);
  s.expect("dot([1,2],[3,4]) = 11", dot({1, 2}, {3, 4}) == 11.0);
  s.expect("dot with zero vector = 0", dot(random_vector(7, rng), ParamVector(7)) == 0.0);
  {
    const ParamVector a = random_vector(100, rng), b = random_vector(100, rng);
    double naive = 0.0;
    for (std::size_t i = 0; i < 100; ++i) naive += a.components()[i] * b.components()[i];
    s.expect("dot matches naive summation", close(dot(a, b), naive, 1e-12));
  }
  s.expect_throws<DimensionError>("dot rejects mismatched dims", [] { dot({1, 2}, {1, 2, 3}); });
  s.expect("l2norm([3,4]) = 5", l2norm({3, 4}) == 5.0);
  s.expect("l2norm(0) = 0", l2norm(ParamVector(4)) == 0.0);
  {
    const ParamVector a = random_vector(20, rng);
    const double c = -3.7;
    s.expect("l2norm homogeneity", close(l2norm(c * a), std::abs(c) * l2norm(a), 1e-12));
    const ParamVector b = random_vector(20, rng);
    s.expect("triangle inequality", l2norm(a + b) <= l2norm(a) + l2norm(b) + 1e-12);
  }
  s.expect("axpy(-1,[1,1],[1,1]) = [0,0]", axpy(-1, {1, 1}, {1, 1}) == ParamVector{0, 0});
  {
    const ParamVector x = random_vector(5, rng), y = random_vector(5, rng);
    s.expect("axpy(0,x,y) = y", axpy(0, x, y) == y);
  }
  s.expect("axpy(2,[1,0],[0,1]) = [2,1]", axpy(2, {1, 0}, {0, 1}) == ParamVector{2, 1});
  s.expect("cosine orthogonal = 0", cosine({1, 0}, {0, 1}) == 0.0);
  {
    const ParamVector a = random_vector(9, rng);
    s.expect("cosine(a,a) = 1", close(cosine(a, a), 1.0, 1e-12));
    s.expect("cosine(a,-a) = -1", close(cosine(a, -a), -1.0, 1e-12));
  }
  s.expect_throws<std::domain_error>("cosine rejects zero norm", [] { cosine({0, 0}, {1, 0}); });
  {
    const std::vector<ParamVector> odd{{1, 0}, {2, 0}, {3, 0}};
    s.expect("median odd count", coordinate_median(odd) == ParamVector{2, 0});
    const std::vector<ParamVector> even{{1}, {3}};
    s.expect("median even count", coordinate_median(even) == ParamVector{2});
  }
  {
    std::vector<ParamVector> vs;
    for (int i = 0; i < 7; ++i) vs.push_back(random_vector(5, rng));
    ParamVector oracle(5);
    for (std::size_t j = 0; j < 5; ++j) {
      std::vector<double> col;
      for (const auto& v : vs) col.push_back(v[j]);
      std::sort(col.begin(), col.end());
      oracle[j] = col[3];
    }
    s.expect("median of 7 random vectors matches sort oracle", coordinate_median(vs) == oracle);
    std::vector<ParamVector> shuffled = vs;
    std::reverse(shuffled.begin(), shuffled.end());
    s.expect("median permutation invariant", coordinate_median(shuffled) == coordinate_median(vs));
  }
  s.expect_throws<std::invalid_argument>("median of empty list", [] {
    coordinate_median(std::span<const ParamVector>{});
  });
  {
    const std::vector<ParamVector> vs{{1, 1}, {3, 3}};
    s.expect("mean {[1,1],[3,3]} = [2,2]", mean(vs) == ParamVector{2, 2});
    const ParamVector v = random_vector(4, rng);
    const std::vector<ParamVector> one{v};
    s.expect("mean of singleton", mean(one) == v);
    std::vector<ParamVector> many;
    for (int i = 0; i < 10; ++i) many.push_back(random_vector(6, rng));
    ParamVector naive(6);
    for (std::size_t j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (const auto& m : many) acc += m[j];
      naive[j] = acc / 10.0;
    }
    s.expect("mean matches naive oracle", vec_close(mean(many), naive, 1e-12));
    const std::vector<ParamVector> same(5, v);
    s.expect("mean and median agree on identical vectors",
             vec_close(mean(same), coordinate_median(same), 1e-15));
  }
  s.expect_throws<std::invalid_argument>("ParamVector rejects NaN input", [] {
    ParamVector::checked({1.0, std::nan("")});
  });
  return s.checks;
}

// ---------------------------------------------------------------- tasks

std::vector<Check> tasks_checks() {
  Suite s;
  Rng rng(23);
  {
    const ParamVector theta = random_vector(4, rng);
    const ParamVector u = random_vector(4, rng);
    const std::vector<Example> batch{{u, dot(u, theta)}};
    s.expect("gradient vanishes at theta* on noiseless data",
             l2norm(regression_gradient(theta, batch)) == 0.0);
  }
  {
    const std::vector<Example> batch{{{1, 0}, 0.0}};
    s.expect("single-example gradient = residual * u",
             regression_gradient({1, 0}, batch) == ParamVector{1, 0});
  }
  {
    const Dataset ds = random_regression(5, 6, rng);
    const ParamVector theta = random_vector(6, rng);
    const ParamVector fd = finite_difference(
        theta, [&](const ParamVector& t) { return regression_loss(t, ds.examples); });
    s.expect("regression gradient vs finite differences (5-example batch)",
             rel_error(regression_gradient(theta, ds.examples), fd) <= 1e-6);
  }
  s.expect_throws<std::invalid_argument>("regression gradient rejects empty batch", [] {
    regression_gradient({1, 2}, std::span<const Example>{});
  });
  s.expect("regression_predict zero model = 0",
           regression_predict(ParamVector(3), random_vector(3, rng)) == 0.0);
  {
    const ParamVector theta = random_vector(8, rng), u = random_vector(8, rng);
    s.expect("regression_predict = dot", regression_predict(theta, u) == dot(u, theta));
  }
  {
    // Joint scaling of labels and model scales the gradient.
    const Dataset ds = random_regression(6, 4, rng);
    const ParamVector theta = random_vector(4, rng);
    Dataset scaled = ds;
    for (auto& ex : scaled.examples) ex.y *= 3.0;
    s.expect("regression gradient linear in the residual",
             vec_close(regression_gradient(3.0 * theta, scaled.examples),
                       3.0 * regression_gradient(theta, ds.examples), 1e-12));
  }
  {
    const std::vector<Example> batch{{{2, -1}, 1.0}};
    const ParamVector g = logistic_gradient(ParamVector(4), batch, 2);
    s.expect("zero-param logistic gradient rows = +-0.5 * features",
             g == ParamVector{1.0, -0.5, -1.0, 0.5});
  }
  {
    const Dataset ds = random_classification(1, 5, 4, rng);
    const ParamVector g = logistic_gradient(random_vector(20, rng), ds.examples, 4);
    double worst = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      double col = 0.0;
      for (std::size_t c = 0; c < 4; ++c) col += g[c * 5 + j];
      worst = std::max(worst, std::abs(col));
    }
    s.expect("logistic gradient rows sum to zero across classes", worst <= 1e-12);
  }
  {
    const Dataset ds = random_classification(5, 4, 3, rng);
    const ParamVector p = random_vector(12, rng);
    const ParamVector fd = finite_difference(
        p, [&](const ParamVector& q) { return logistic_loss(q, ds.examples, 3); });
    s.expect("logistic gradient vs finite differences (5-example batch)",
             rel_error(logistic_gradient(p, ds.examples, 3), fd) <= 1e-5);
  }
  s.expect_throws<std::invalid_argument>("logistic gradient rejects out-of-range label", [] {
    const std::vector<Example> batch{{{1, 1}, 5.0}};
    logistic_gradient(ParamVector(4), batch, 2);
  });
  s.expect("logistic_predict zero params -> class 0",
           logistic_predict(ParamVector(9), {1, 2, 3}, 3) == 0);
  {
    const ParamVector x{0.5, -1, 2};
    ParamVector p(9);
    for (std::size_t j = 0; j < 3; ++j) p[2 * 3 + j] = x[j];
    s.expect("logistic_predict picks the matching row", logistic_predict(p, x, 3) == 2);
  }
  {
    const ParamVector p = random_vector(15, rng), x = random_vector(3, rng);
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t c = 0; c < 5; ++c) {
      double score = 0.0;
      for (std::size_t j = 0; j < 3; ++j) score += p[c * 3 + j] * x[j];
      if (score > best_score) best_score = score, best = c;
    }
    s.expect("logistic_predict matches score enumeration", logistic_predict(p, x, 5) == best);
  }
  s.expect("eta = 1/1600 within the contractive step bound",
           1.0 / 1600.0 <= kSyntheticRegressionCurvature.max_contractive_step());
  return s.checks;
}

// ---------------------------------------------------------------- data

std::vector<Check> data_checks() {
  Suite s;
  s.guarded("synthetic regression", [&] {
    const auto a = gen_synthetic_regression(5, 10000, 100);
    s.expect("synthetic regression has 10000 x 100", a.data.size() == 10000 && a.data.feature_dim() == 100);
    const auto b = gen_synthetic_regression(5, 10000, 100);
    bool same = a.true_model == b.true_model;
    for (std::size_t i = 0; same && i < a.data.size(); ++i) {
      same = a.data.examples[i].features == b.data.examples[i].features &&
             a.data.examples[i].y == b.data.examples[i].y;
    }
    s.expect("synthetic regression deterministic per seed", same);
    double worst = 0.0;
    for (std::size_t j = 0; j < 100; ++j) {
      double m = 0.0;
      for (const auto& ex : a.data.examples) m += ex.features[j];
      worst = std::max(worst, std::abs(m / 10000.0));
    }
    s.expect("feature means within 0.05", worst <= 0.05, "max |mean| " + num(worst));

    const auto split = split_train_test(a.data, 8000, 9);
    s.expect("split 8000 / 2000", split.train.size() == 8000 && split.test.size() == 2000);
    const auto tiny = split_train_test(a.data, 9999, 9);
    s.expect("split leaves a single test example", tiny.test.size() == 1);
    const auto again = split_train_test(a.data, 8000, 9);
    const auto other = split_train_test(a.data, 8000, 10);
    s.expect("split deterministic per seed",
             again.test.examples.front().features == split.test.examples.front().features);
    s.expect("split differs across seeds",
             !(other.test.examples.front().features == split.test.examples.front().features));

    const auto parts = partition(split.train, {100, PartitionMode::iid, 0.5}, 3);
    s.expect("iid partition deals 80 each",
             std::all_of(parts.begin(), parts.end(), [](const Dataset& d) { return d.size() == 80; }));
    const auto trusted = sample_trusted(split.train, {100, 0.9}, 4);
    s.expect("regression trusted set has 100 examples", trusted.size() == 100);
    Rng rng(1);
    s.expect("minibatch of 16", minibatch(split.train, 16, rng).size() == 16);
  });

  s.guarded("classification partition", [&] {
    ClassificationMixtureSpec mix;
    mix.num_samples = 12000;
    const Dataset ds = gen_synthetic_classification(2, mix);
    const std::size_t n = 30, C = mix.num_classes;

    const auto uniform = partition(ds, {n, PartitionMode::noniid, 1.0 / static_cast<double>(C)}, 8);
    // Contingency of (label, client group) against uniform group choice.
    std::vector<double> counts(C * C, 0.0), per_class(C, 0.0);
    std::size_t assigned = 0;
    for (std::size_t client = 0; client < n; ++client) {
      const std::size_t g = noniid_group_of(client, n, C);
      for (const auto& ex : uniform[client].examples) {
        counts[class_label(ex) * C + g] += 1.0;
        per_class[class_label(ex)] += 1.0;
        ++assigned;
      }
    }
    double stat = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t g = 0; g < C; ++g) {
        const double expected = per_class[c] / static_cast<double>(C);
        stat += (counts[c * C + g] - expected) * (counts[c * C + g] - expected) / expected;
      }
    }
    const boost::math::chi_squared dist(static_cast<double>(C * (C - 1)));
    const double p = boost::math::cdf(boost::math::complement(dist, stat));
    s.expect("noniid q=1/C indistinguishable from uniform (chi-square p > 0.01)", p > 0.01,
             "p = " + num(p));
    s.expect("partition exhaustive", assigned == ds.size());

    const auto pure = partition(ds, {n, PartitionMode::noniid, 1.0}, 8);
    bool own_group = true;
    for (std::size_t client = 0; client < n; ++client) {
      for (const auto& ex : pure[client].examples) {
        own_group = own_group && class_label(ex) == noniid_group_of(client, n, C);
      }
    }
    s.expect("noniid q=1 keeps every example in its label's group", own_group);

    const auto t1 = sample_trusted(ds, {100, 1.0}, 3);
    s.expect("DS = 1 draws the whole trusted set from class 0",
             t1.size() == 100 && std::all_of(t1.examples.begin(), t1.examples.end(),
                                             [](const Example& e) { return class_label(e) == 0; }));
  });

  s.guarded("trusted DS = 1/C", [&] {
    ClassificationMixtureSpec mix;
    mix.num_classes = 10;
    mix.num_samples = 3000;
    const Dataset ds = gen_synthetic_classification(4, mix);
    const auto t = sample_trusted(ds, {100, 0.1}, 5);
    const auto zeros = std::count_if(t.examples.begin(), t.examples.end(),
                                     [](const Example& e) { return class_label(e) == 0; });
    s.expect("DS = 1/C with C = 10 draws 10 from class 0", zeros == 10 && t.size() == 100);
  });

  s.expect_throws<std::invalid_argument>("noniid on regression data is rejected", [] {
    const auto r = gen_synthetic_regression(1, 100, 3);
    partition(r.data, {10, PartitionMode::noniid, 0.5}, 1);
  });

  s.guarded("csv round trip", [&] {
    const auto dir = std::filesystem::temp_directory_path() / "aflguard_verify_csv";
    std::filesystem::create_directories(dir);
    const auto r = gen_synthetic_regression(3, 50, 4);
    save_csv(r.data, dir / "rt.csv");
    const Dataset back = load_csv(dir / "rt.csv");
    bool ok = back.size() == r.data.size();
    for (std::size_t i = 0; ok && i < back.size(); ++i) {
      ok = vec_close(back.examples[i].features, r.data.examples[i].features, 1e-9) &&
           close(back.examples[i].y, r.data.examples[i].y, 1e-9, 1e-12);
    }
    s.expect("csv round trip", ok);
    {
      std::ofstream bad(dir / "bad.csv");
      bad << "# kind=regression\n1,2,3\n1,2\n";
    }
    try {
      load_csv(dir / "bad.csv");
      s.expect("csv width mismatch names the line", false, "no exception");
    } catch (const ParseError& e) {
      s.expect("csv width mismatch names the line", std::string(e.what()).find(":3:") != std::string::npos,
               e.what());
    }
    std::filesystem::remove_all(dir);
  });
  return s.checks;
}

// ---------------------------------------------------------------- attacks

std::vector<Check> attacks_checks() {
  Suite s;
  Rng rng(37);
  s.expect("flip_label(1, 10) = 8", flip_label(1, 10) == 8);
  s.expect("flip_label(C-1, C) = 0", flip_label(5, 6) == 0);
  bool involution = true;
  for (std::size_t y = 0; y < 7; ++y) involution = involution && flip_label(flip_label(y, 7), 7) == y;
  s.expect("flip is an involution", involution);
  s.expect_throws<std::out_of_range>("flip_label rejects out-of-range labels", [] { flip_label(6, 6); });
  {
    Rng g(5);
    const std::size_t draws = 10000;
    std::vector<double> sum(100, 0.0), sq(100, 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
      const ParamVector v = gaussian_update(100, 200.0, g);
      for (std::size_t j = 0; j < 100; ++j) sum[j] += v[j], sq[j] += v[j] * v[j];
    }
    double worst_sd = 0.0, worst_mean = 0.0;
    for (std::size_t j = 0; j < 100; ++j) {
      const double m = sum[j] / draws;
      const double sd = std::sqrt(sq[j] / draws - m * m);
      worst_sd = std::max(worst_sd, std::abs(sd - 200.0) / 200.0);
      worst_mean = std::max(worst_mean, std::abs(m));
    }
    s.expect("gaussian std within 5% of sigma", worst_sd <= 0.05, num(worst_sd));
    s.expect("gaussian mean within 8", worst_mean <= 8.0, num(worst_mean));
    Rng a(9), b(9);
    s.expect("gaussian deterministic per rng state",
             gaussian_update(10, 200.0, a) == gaussian_update(10, 200.0, b));
  }
  s.expect("gd([1,2], -10) = [-10,-20]", gradient_deviation_update({1, 2}, -10) == ParamVector{-10, -20});
  s.expect("gd(0) = 0", gradient_deviation_update(ParamVector(3), -10) == ParamVector(3));
  {
    const ParamVector h = random_vector(8, rng);
    const ParamVector out = gradient_deviation_update(h, -10);
    s.expect("gd norm homogeneity", close(l2norm(out), 10.0 * l2norm(h), 1e-12));
    s.expect("gd reverses direction", close(cosine(h, out), -1.0, 1e-12));
  }
  s.expect_throws<std::invalid_argument>("gd rejects non-negative scale", [] {
    gradient_deviation_update({1}, 0.0);
  });
  {
    Dataset local = random_classification(80, 45, 3, rng);
    AttackConfig cfg;
    cfg.kind = AttackKind::backdoor;
    cfg.bd_replication_fraction = 0.125;
    cfg.bd_target_class = 2;
    const Dataset poisoned = backdoor_poison(local, cfg);
    s.expect("10 of 80 replicated -> 90 examples", poisoned.size() == 90);
    bool labels = true, zeroed = true;
    for (std::size_t i = 80; i < poisoned.size(); ++i) {
      labels = labels && class_label(poisoned.examples[i]) == 2;
      for (std::size_t j = 0; j < 45; j += 20) zeroed = zeroed && poisoned.examples[i].features[j] == 0.0;
    }
    s.expect("replicas carry the target label", labels);
    s.expect("replicas are zero at trigger indices", zeroed);
  }
  {
    AttackConfig cfg;
    cfg.bd_scale_factor = 1.0;
    const ParamVector h = random_vector(5, rng);
    s.expect("bd scale 1 is identity", backdoor_update(h, cfg) == h);
    cfg.bd_scale_factor = 5.0;
    s.expect("bd scale 5 on [1,0]", backdoor_update({1, 0}, cfg) == ParamVector{5, 0});
    s.expect("bd norm scales linearly", close(l2norm(backdoor_update(h, cfg)), 5.0 * l2norm(h), 1e-12));
  }
  {
    AttackConfig cfg;
    const ParamVector gs = random_vector(10, rng);
    const ThreatKnowledge k{ParamVector(10), gs, gs, 1.5};
    const double tol = 10.0 * l2norm(gs) / std::pow(2.0, static_cast<double>(cfg.adaptive_gamma_iters));
    const double gamma = adaptive_gamma(k, cfg);
    s.expect("adapt: g_bar = g_s gives gamma = lambda * ||g_s||",
             std::abs(gamma - 1.5 * l2norm(gs)) <= tol, num(gamma));
    const ThreatKnowledge k0{ParamVector(10), gs, gs, 0.0};
    s.expect("adapt: lambda = 0 returns g_bar", adaptive_update(k0, cfg) == gs);
  }
  {
    AttackConfig cfg;
    bool valid = true, maximal = true;
    std::size_t probed = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const ParamVector gs = random_vector(12, rng);
      // Start inside the acceptance ball so the crafted update must stay there.
      const ParamVector gbar = gs + random_vector(12, rng, 0.5 * l2norm(gs) / std::sqrt(12.0));
      const ThreatKnowledge k{ParamVector(12), gbar, gs, 1.5};
      const ParamVector out = adaptive_update(k, cfg);
      valid = valid && aflguard_accept(out, gs, 1.5);
      const double gamma = adaptive_gamma(k, cfg);
      if (gamma < 10.0 * l2norm(gs)) {
        ++probed;
        const ParamVector dir = (1.0 / l2norm(gbar)) * gbar;
        // One more step of 1e-3 ||g_s|| along the reversal leaves the ball.
        maximal = maximal && !aflguard_accept(axpy(-1e-3 * l2norm(gs), dir, out), gs, 1.5);
      }
    }
    s.expect("adapt output always passes the acceptance test", valid);
    s.expect("adapt maximality probe", maximal && probed > 0, std::to_string(probed) + " probed");
  }
  {
    const ParamVector gs{1, 0};
    const ThreatKnowledge k{ParamVector(2), ParamVector{-5, 0}, gs, 1.5};
    s.expect("adapt returns g_bar when even gamma = 0 fails",
             adaptive_update(k, AttackConfig{}) == ParamVector{-5, 0});
  }
  s.expect_throws<std::invalid_argument>("adapt rejects zero-norm knowledge", [] {
    adaptive_update({ParamVector(2), ParamVector(2), ParamVector{1, 0}, 1.5}, AttackConfig{});
  });
  return s.checks;
}

// ---------------------------------------------------------------- defenses

std::vector<Check> defenses_checks() {
  Suite s;
  Rng rng(41);
  {
    const ParamVector g = random_vector(6, rng);
    s.expect("aflguard: identical updates accepted", aflguard_accept(g, g, 0.01));
  }
  s.expect("aflguard: [-1,0] vs [1,0] rejected at 1.5", !aflguard_accept({-1, 0}, {1, 0}, 1.5));
  s.expect("aflguard: boundary (1+lambda) * g_s accepted", aflguard_accept({2.5, 0}, {1, 0}, 1.5));
  {
    bool equivariant = true;
    for (int i = 0; i < 200; ++i) {
      const ParamVector gc = random_vector(5, rng), gs = random_vector(5, rng);
      const double c = (i % 2 ? -1.0 : 1.0) * std::exp(std::normal_distribution<double>()(rng));
      equivariant = equivariant && aflguard_accept(gc, gs, 1.5) == aflguard_accept(c * gc, c * gs, 1.5);
    }
    s.expect("aflguard scale equivariant", equivariant);
    s.expect("aflguard: huge lambda accepts", aflguard_accept(random_vector(5, rng), {1e-3, 0, 0, 0, 0}, 1e12));
    s.expect("aflguard: zero g_s accepts only zero",
             aflguard_accept(ParamVector(3), ParamVector(3), 1.5) &&
                 !aflguard_accept({1e-9, 0, 0}, ParamVector(3), 1.5));
  }
  s.expect_throws<DimensionError>("aflguard rejects mismatched dims", [] {
    aflguard_accept({1, 2}, {1, 2, 3}, 1.5);
  });
  {
    KardamState k;
    s.expect("kardam: first update accepted", k.step(4, {1, 2}, {0, 0}).decision == Decision::accept);
    const auto seed = [](KardamState& st, std::size_t c, double coef) {
      st.set_record(c, {ParamVector{0}, ParamVector{0}, coef});
    };
    for (double incoming : {0.8, 5.0}) {
      KardamState st;
      seed(st, 1, 0.5), seed(st, 2, 1.0), seed(st, 3, 2.0);
      st.set_record(0, {ParamVector{0}, ParamVector{0}, std::nullopt});
      const Verdict v = st.step(0, ParamVector{incoming}, ParamVector{1});
      if (incoming < 1.0) s.expect("kardam: 0.8 <= median 1.0 accepted", v.decision == Decision::accept);
      else s.expect("kardam: 5.0 > median 1.0 rejected", v.decision == Decision::reject);
    }
    // Relabel clients: same coefficients and K, same decision.
    KardamState st;
    seed(st, 17, 0.5), seed(st, 3, 1.0), seed(st, 9, 2.0);
    st.set_record(42, {ParamVector{0}, ParamVector{0}, std::nullopt});
    s.expect("kardam decision ignores client identity",
             st.step(42, ParamVector{0.8}, ParamVector{1}).decision == Decision::accept);
  }
  {
    BasgdState b(2);
    s.expect("basgd: B=2, one update buffered", b.step(0, {1}).decision == Decision::buffered);
    BasgdState one(1);
    const ParamVector u = random_vector(4, rng);
    const Verdict v = one.step(7, u);
    s.expect("basgd: B=1 passes updates through", v.decision == Decision::accept && *v.effective_update == u);
    BasgdState three(3);
    three.step(0, {0});
    three.step(3, {1});
    three.step(1, {2});
    const Verdict fired = three.step(2, {10});
    const std::vector<ParamVector> means{{0.5}, {2}, {10}};
    s.expect("basgd: median of buffer means",
             fired.decision == Decision::accept && *fired.effective_update == coordinate_median(means) &&
                 *fired.effective_update == ParamVector{2});
    s.expect("basgd: buffers empty after firing", three.buffered_count() == 0);
  }
  {
    const ParamVector gs = random_vector(5, rng);
    const Verdict v = zeno_step(3.0 * gs, gs);
    s.expect("zeno: 3 * g_s normalised to g_s", v.decision == Decision::accept && vec_close(*v.effective_update, gs, 1e-12));
    s.expect("zeno: orthogonal rejected", zeno_step({0, 1}, {1, 0}).decision == Decision::reject);
    s.expect("zeno: opposite rejected", zeno_step(-gs, gs).decision == Decision::reject);
    bool norms = true;
    for (int i = 0; i < 100; ++i) {
      const ParamVector c = random_vector(5, rng);
      const Verdict z = zeno_step(c, gs);
      if (z.decision == Decision::accept) norms = norms && close(l2norm(*z.effective_update), l2norm(gs), 1e-12);
    }
    s.expect("zeno: accepted norm equals ||g_s||", norms);
    s.expect_throws<std::invalid_argument>("zeno rejects zero server update", [] {
      zeno_step({1, 0}, {0, 0});
    });
  }
  {
    const ParamVector u = random_vector(3, rng);
    const Verdict v = asyncsgd_step(u);
    s.expect("asyncsgd accepts unchanged", v.decision == Decision::accept && *v.effective_update == u);
    s.expect("asyncsgd accepts zero", asyncsgd_step(ParamVector(3)).decision == Decision::accept);
    s.expect("asyncsgd accepts adversarial", asyncsgd_step({1e12, -1e12}).decision == Decision::accept);
  }
  return s.checks;
}

// ---------------------------------------------------------------- metrics

std::vector<Check> metrics_checks() {
  Suite s;
  Rng rng(53);
  {
    const std::vector<double> a{1, 2, 3};
    s.expect("mse identical = 0", mse(a, a) == 0.0);
    const std::vector<double> p{0, 1}, t{1, 1};
    s.expect("mse [0,1] vs [1,1] = 0.5", mse(p, t) == 0.5);
    std::vector<double> x(50), y(50);
    std::normal_distribution<double> n;
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    double naive = 0.0;
    for (std::size_t i = 0; i < 50; ++i) naive += (x[i] - y[i]) * (x[i] - y[i]);
    s.expect("mse matches naive loop", close(mse(x, y), naive / 50.0, 1e-12));
    s.expect_throws<std::invalid_argument>("mse rejects empty lists", [] {
      mse(std::span<const double>{}, std::span<const double>{});
    });
  }
  {
    const ParamVector t = random_vector(5, rng);
    s.expect("mee self = 0", mee(t, t) == 0.0);
    ParamVector e = t;
    e[0] += 1.0;
    s.expect("mee unit offset = 1", close(mee(e, t), 1.0, 1e-12));
    const ParamVector o = random_vector(5, rng);
    s.expect("mee symmetric", mee(o, t) == mee(t, o));
  }
  {
    Dataset ds{TaskKind::classification, 2, {}};
    for (int i = 0; i < 10; ++i) ds.examples.push_back({{1.0, 0.0}, static_cast<double>(i % 2)});
    s.expect("zero model on balanced 2-class set errs half", test_error_rate(ParamVector(4), ds) == 0.5);
    // Row c scores c-th coordinate.
    Dataset onehot{TaskKind::classification, 3, {}};
    for (int i = 0; i < 9; ++i) {
      ParamVector f(3);
      f[i % 3] = 1.0;
      onehot.examples.push_back({f, static_cast<double>(i % 3)});
    }
    ParamVector eye(9);
    for (std::size_t c = 0; c < 3; ++c) eye[c * 3 + c] = 1.0;
    s.expect("perfect model has zero error", test_error_rate(eye, onehot) == 0.0);
    const Dataset rnd = random_classification(40, 4, 3, rng);
    const ParamVector p = random_vector(12, rng);
    std::size_t wrong = 0;
    for (const auto& ex : rnd.examples) wrong += logistic_predict(p, ex.features, 3) != class_label(ex);
    s.expect("error rate matches enumeration", test_error_rate(p, rnd) == static_cast<double>(wrong) / 40.0);

    AttackConfig cfg;
    cfg.kind = AttackKind::backdoor;
    cfg.bd_target_class = 0;
    s.expect("model always predicting target -> ASR 1", attack_success_rate(ParamVector(12), rnd, cfg) == 1.0);
    cfg.bd_target_class = 1;
    s.expect("model never predicting target -> ASR 0", attack_success_rate(ParamVector(12), rnd, cfg) == 0.0);
    std::size_t eligible = 0, hit = 0;
    for (const auto& ex : rnd.examples) {
      if (class_label(ex) == 1) continue;
      ++eligible;
      ParamVector f = ex.features;
      for (std::size_t j = 0; j < f.dim(); j += cfg.bd_trigger_period) f[j] = 0.0;
      hit += logistic_predict(p, f, 3) == 1;
    }
    s.expect("ASR matches enumeration",
             attack_success_rate(p, rnd, cfg) == static_cast<double>(hit) / static_cast<double>(eligible));
    Dataset all_target{TaskKind::classification, 3, {{{1, 1}, 1.0}}};
    s.expect_throws<std::invalid_argument>("ASR with no eligible inputs", [&] {
      attack_success_rate(ParamVector(6), all_target, cfg);
    });
  }
  return s.checks;
}

// ---------------------------------------------------------------- engine

PreparedData small_regression(std::uint64_t seed, std::size_t clients = 100) {
  ExperimentConfig cfg = synthetic_regression_defaults();
  cfg.clients.num_clients = clients;
  return prepare_data(cfg, seed);
}

// Plain sequential SGD on the pooled client data, independent of the engine loop.
double sequential_sgd_distance(const PreparedData& data, std::uint64_t seed, std::size_t T, double eta,
                               std::size_t batch) {
  std::mt19937_64 rng(seed);
  std::vector<double> theta(data.feature_dim, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& local = data.clients[rng() % data.clients.size()].examples;
    std::vector<double> grad(theta.size(), 0.0);
    std::vector<std::size_t> idx(local.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t b = 0; b < batch; ++b) {
      const Example& ex = local[idx[b]];
      double r = -ex.y;
      for (std::size_t j = 0; j < theta.size(); ++j) r += ex.features[j] * theta[j];
      for (std::size_t j = 0; j < theta.size(); ++j) grad[j] += r * ex.features[j];
    }
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= eta * grad[j];
  }
  double d = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    d += (theta[j] - (*data.true_model)[j]) * (theta[j] - (*data.true_model)[j]);
  }
  return std::sqrt(d);
}

std::vector<Check> engine_checks() {
  Suite s;
  s.guarded("engine", [&] {
    const PreparedData data = small_regression(21);
    TrialConfig base = trial_config(synthetic_regression_defaults());
    base.num_malicious = 0;
    base.attack.kind = AttackKind::none;

    TrialConfig huge = base;
    huge.defense.kind = DefenseKind::aflguard;
    huge.defense.lambda = 1e9;
    TrialConfig plain = base;
    plain.defense.kind = DefenseKind::asyncsgd;
    const TrialResult a = run_trial(huge, data, 5);
    const TrialResult b = run_trial(plain, data, 5);
    s.expect("aflguard with lambda 1e9 matches asyncsgd bit for bit", a.final_model == b.final_model);

    TrialConfig seq = base;
    seq.schedule.max_client_delay = 0;
    seq.record_distance_trace = true;
    const TrialResult r = run_trial(seq, data, 6);
    const double oracle = sequential_sgd_distance(data, 6, 2000, 1.0 / 1600.0, 16);
    const double got = r.distance_trace.back();
    s.expect("tau_max = 0 reaches distance < 1 like a sequential SGD oracle",
             got < 1.0 && oracle < 1.0 && got < 2.0 * oracle && oracle < 2.0 * got,
             "engine " + num(got) + ", oracle " + num(oracle));

    const TrialResult again = run_trial(huge, data, 5);
    bool same = again.final_model == a.final_model && again.records.size() == a.records.size();
    for (std::size_t i = 0; same && i < a.records.size(); ++i) {
      same = again.records[i].primary == a.records[i].primary && again.records[i].mee == a.records[i].mee;
    }
    s.expect("trial deterministic per seed", same);

    bool increasing = true;
    for (std::size_t i = 1; i < a.records.size(); ++i) {
      increasing = increasing && a.records[i].iteration > a.records[i - 1].iteration;
    }
    s.expect("checkpoints strictly increasing", increasing);
    s.expect("checkpoint cadence 50 plus final",
             a.records.size() == 41 && a.records.back().iteration == 2000);

    TrialConfig shut = base;
    shut.defense.lambda = 1e-9;
    shut.num_malicious = 20;
    shut.attack.kind = AttackKind::gradient_deviation;
    const TrialResult closed = run_trial(shut, data, 7);
    s.expect("rejections leave theta untouched",
             closed.accepted == 0 && closed.final_model == ParamVector(data.param_count()));

    TrialConfig gd = base;
    gd.defense.kind = DefenseKind::asyncsgd;
    gd.num_malicious = 20;
    gd.attack.kind = AttackKind::gradient_deviation;
    s.expect("asyncsgd under gd diverges", is_divergent(run_trial(gd, data, 8).final_record().primary));

    // Threat knowledge.
    GlobalState state(ParamVector(data.param_count()), 10);
    state.server_update = ParamVector(data.param_count());
    const std::vector<Dataset> twins(3, data.clients[0]);
    TrialConfig kc = base;
    kc.schedule.reduction = UpdateReduction::mean;
    const ThreatKnowledge kt = make_threat_knowledge(state, 0, twins, data, kc);
    s.expect("identical clients: benign mean = one client's gradient",
             vec_close(kt.benign_mean_gradient,
                       regression_gradient(state.theta, data.clients[0].examples), 1e-12));
    const std::span<const Dataset> first(data.clients.data(), 1);
    s.expect("partial knowledge with one client uses its data only",
             vec_close(make_threat_knowledge(state, 0, first, data, kc).benign_mean_gradient,
                       regression_gradient(state.theta, data.clients[0].examples), 1e-12));
    Dataset pooled = data.clients[0].empty_like();
    for (const auto& c : data.clients) pooled.examples.insert(pooled.examples.end(), c.examples.begin(), c.examples.end());
    s.expect("mean over equal-size clients = pooled gradient",
             vec_close(make_threat_knowledge(state, 0, data.clients, data, kc).benign_mean_gradient,
                       regression_gradient(state.theta, pooled.examples), 1e-10));
    s.expect_throws<std::out_of_range>("evicted base model", [&] {
      GlobalState st(ParamVector(2), 1);
      st.history.push(1, ParamVector(2));
      st.history.push(2, ParamVector(2));
      (void)st.history.at(0);
    });
  });
  return s.checks;
}

// ---------------------------------------------------------------- cli

std::vector<Check> cli_checks() {
  Suite s;
  const ExperimentConfig d = synthetic_regression_defaults();
  s.expect("defaults: n=100, 20% malicious, lambda 1.5, T 2000, eta 1/1600, batch 16, tau 10/10, trusted 100",
           d.clients.num_clients == 100 && d.clients.malicious_fraction == 0.2 &&
               d.clients.num_malicious() == 20 && d.defense.lambda == 1.5 &&
               d.schedule.total_iterations == 2000 && d.schedule.learning_rate == 1.0 / 1600.0 &&
               d.schedule.batch_size == 16 && d.schedule.max_client_delay == 10 &&
               d.schedule.server_refresh_period == 10 && d.server.size == 100);
  s.expect("config text round trip",
           format_config(parse_config(format_config(d))) == format_config(d));
  s.expect_throws<ConfigError>("malicious_fraction = 1.0 rejected", [] {
    parse_config("[clients]\nreal malicious_fraction = 1.0\n");
  });
  try {
    parse_config("[defense]\nreal lamda = 1.5\n");
    s.expect("unknown key named in the error", false, "no exception");
  } catch (const ConfigError& e) {
    s.expect("unknown key named in the error", std::string(e.what()).find("defense.lamda") != std::string::npos,
             e.what());
  }
  s.expect_throws<ConfigError>("sweep with empty values", [&] { sweep(d, "lambda", {}, "unused"); });
  s.expect_throws<ConfigError>("sweep with unknown axis", [&] { sweep(d, "eta", {1.0}, "unused"); });
  s.guarded("summaries", [&] {
    ExperimentConfig c = d;
    c.seeds.run = {4};
    c.attack.kind = AttackKind::none;
    const auto clean = summary_json(c, run_seeds(c, c.seeds.run));
    s.expect("summary carries mse and mee",
             clean.find("\"mse\"") != std::string::npos && clean.find("\"mee\"") != std::string::npos);
    c.attack.kind = AttackKind::gradient_deviation;
    c.defense.kind = DefenseKind::asyncsgd;
    const auto broken = summary_json(c, run_seeds(c, c.seeds.run));
    s.expect("asyncsgd under gd reports the divergence marker",
             broken.find("\"mean\": \">1000\"") != std::string::npos);
  });
  return s.checks;
}

// ---------------------------------------------------------------- criteria helpers

struct Finals {
  std::vector<double> primary, mee, asr, reject_rate;
  bool all_divergent = true;
};

Finals finals(const std::vector<SeedRun>& runs) {
  Finals f;
  for (const auto& r : runs) {
    const MetricRecord& last = r.result.final_record();
    const double p = is_divergent(last.primary) ? std::numeric_limits<double>::infinity() : last.primary;
    f.primary.push_back(p);
    if (last.mee) f.mee.push_back(is_divergent(*last.mee) ? std::numeric_limits<double>::infinity() : *last.mee);
    if (last.attack_success_rate) f.asr.push_back(*last.attack_success_rate);
    const double seen = static_cast<double>(r.result.accepted + r.result.rejected + r.result.buffered);
    f.reject_rate.push_back(static_cast<double>(r.result.rejected) / seen);
    f.all_divergent = f.all_divergent && is_divergent(last.primary);
  }
  return f;
}

double avg(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::string list(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + (is_divergent(xs[i]) ? std::string(">1000") : num(xs[i]));
  return out + "]";
}

ExperimentConfig with(ExperimentConfig cfg, DefenseKind defense, AttackKind attack) {
  cfg.defense.kind = defense;
  cfg.attack.kind = attack;
  return cfg;
}

CriterionResult finish(int id, std::string title, std::vector<Check> checks) {
  CriterionResult r{id, std::move(title), true, std::move(checks)};
  for (const auto& c : r.checks) r.passed = r.passed && c.passed;
  return r;
}

const std::vector<AttackKind> kUntargeted = {AttackKind::label_flip, AttackKind::gaussian,
                                             AttackKind::gradient_deviation, AttackKind::adaptive};

}  // namespace

ExperimentConfig synthetic_regression_defaults() { return ExperimentConfig{}; }

ExperimentConfig backdoor_classification_defaults() {
  ExperimentConfig c;
  c.task.source = TaskSource::synthetic_classification;
  c.task.num_samples = 6000;
  c.task.dim = 120;
  c.task.train_count = 4500;
  c.task.num_classes = 6;
  c.task.class_separation = 0.35;
  c.task.trigger_offset = 2.0;
  c.clients.num_clients = 30;
  c.clients.malicious_fraction = 0.2;
  c.clients.partition = PartitionMode::noniid;
  c.clients.noniid_degree = 0.5;
  c.attack.kind = AttackKind::backdoor;
  c.attack.bd_target_class = 1;
  c.attack.bd_replication_fraction = 1.0;
  c.attack.bd_scale_factor = 10.0;
  c.schedule.total_iterations = 1000;
  c.schedule.learning_rate = 1.0 / 320.0;
  c.schedule.batch_size = 32;
  c.server.size = 100;
  c.server.distribution_shift = 0.5;
  return c;
}

Context::Context(std::vector<std::uint64_t> seeds) : seeds_(std::move(seeds)) {}

const std::vector<SeedRun>& Context::runs(const ExperimentConfig& cfg) {
  ExperimentConfig keyed = cfg;
  keyed.seeds.run = seeds_;
  const std::string key = format_config(keyed);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto runs = run_seeds(keyed, seeds_);
  std::lock_guard lock(mutex_);
  return cache_.emplace(key, std::move(runs)).first->second;
}

std::vector<int> criterion_ids() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}; }

std::vector<std::string> modules() {
  return {"vecmath", "tasks", "data", "attacks", "defenses", "engine", "metrics", "cli"};
}

std::vector<Check> module_properties(const std::string& module) {
  if (module == "vecmath") return vecmath_checks();
  if (module == "tasks") return tasks_checks();
  if (module == "data") return data_checks();
  if (module == "attacks") return attacks_checks();
  if (module == "defenses") return defenses_checks();
  if (module == "engine") return engine_checks();
  if (module == "metrics") return metrics_checks();
  if (module == "cli") return cli_checks();
  throw std::invalid_argument("unknown module '" + module + "'");
}

CriterionResult criterion(int id, Context& ctx) {
  const ExperimentConfig reg = synthetic_regression_defaults();
  switch (id) {
    case 1: {
      std::vector<Check> checks;
      for (AttackKind a : {AttackKind::none, AttackKind::label_flip, AttackKind::gaussian,
                           AttackKind::gradient_deviation, AttackKind::adaptive}) {
        const Finals f = finals(ctx.runs(with(reg, DefenseKind::aflguard, a)));
        const double m = avg(f.primary), e = avg(f.mee);
        checks.push_back({"aflguard/" + std::string(to_string(a)) + " mse <= 0.05 and mee <= 0.40",
                          m <= kRobustMse && e <= kRobustMee,
                          "mse " + list(f.primary) + " mean " + num(m) + "; mee " + list(f.mee) +
                              " mean " + num(e)});
      }
      return finish(1, "AFLGuard robustness on synthetic regression", checks);
    }
    case 2: {
      std::vector<Check> checks;
      for (AttackKind a : {AttackKind::gradient_deviation, AttackKind::adaptive}) {
        const Finals f = finals(ctx.runs(with(reg, DefenseKind::asyncsgd, a)));
        checks.push_back({"asyncsgd/" + std::string(to_string(a)) + " diverges", f.all_divergent,
                          "mse " + list(f.primary)});
      }
      const Finals async = finals(ctx.runs(with(reg, DefenseKind::asyncsgd, AttackKind::gaussian)));
      const Finals guard = finals(ctx.runs(with(reg, DefenseKind::aflguard, AttackKind::gaussian)));
      checks.push_back({"asyncsgd/gauss mse >= 5x aflguard/gauss",
                        avg(async.primary) >= kGaussGapFactor * avg(guard.primary),
                        num(avg(async.primary)) + " vs " + num(avg(guard.primary))});
      return finish(2, "AsyncSGD fragility", checks);
    }
    case 3: {
      std::vector<Check> checks;
      const Finals kardam = finals(ctx.runs(with(reg, DefenseKind::kardam, AttackKind::gradient_deviation)));
      checks.push_back({"kardam/gd mse >= 5", avg(kardam.primary) >= kKardamGdMinMse,
                        "mse " + list(kardam.primary)});
      const Finals basgd = finals(ctx.runs(with(reg, DefenseKind::basgd, AttackKind::gradient_deviation)));
      checks.push_back({"basgd/gd diverges", basgd.all_divergent, "mse " + list(basgd.primary)});
      for (AttackKind a : kUntargeted) {
        const Finals z = finals(ctx.runs(with(reg, DefenseKind::zenopp, a)));
        checks.push_back({"zenopp/" + std::string(to_string(a)) + " mse <= 0.06",
                          avg(z.primary) <= kZenoMaxMse, "mse " + list(z.primary) + " mean " + num(avg(z.primary))});
      }
      return finish(3, "Baseline ordering", checks);
    }
    case 4: {
      const Finals guard = finals(ctx.runs(with(reg, DefenseKind::aflguard, AttackKind::none)));
      const Finals async = finals(ctx.runs(with(reg, DefenseKind::asyncsgd, AttackKind::none)));
      return finish(4, "No-attack parity",
                    {{"aflguard mse <= 1.5x asyncsgd mse",
                      avg(guard.primary) <= kNoAttackParityFactor * avg(async.primary),
                      num(avg(guard.primary)) + " vs " + num(avg(async.primary))}});
    }
    case 5: {
      ExperimentConfig c = with(reg, DefenseKind::aflguard, AttackKind::gradient_deviation);
      c.clients.malicious_fraction = kHighMaliciousFraction;
      const Finals f = finals(ctx.runs(c));
      return finish(5, "High-malicious robustness",
                    {{"aflguard/gd at 45% malicious mse <= 0.06", avg(f.primary) <= kHighMaliciousMaxMse,
                      "mse " + list(f.primary) + " mean " + num(avg(f.primary))}});
    }
    case 6: {
      std::vector<Check> checks;
      ExperimentConfig c = with(reg, DefenseKind::aflguard, AttackKind::none);
      c.clients.malicious_fraction = 0.0;
      checks.push_back({"eta <= 2/(mu+L)",
                        c.schedule.learning_rate <= kSyntheticRegressionCurvature.max_contractive_step(),
                        num(c.schedule.learning_rate)});
      std::vector<std::pair<bool, std::string>> per_seed(ctx.seeds().size());
      parallel_for(per_seed.size(), [&](std::size_t i) {
        const std::uint64_t seed = ctx.seeds()[i];
        const PreparedData data = prepare_data(c, data_seed_for(c, seed));
        TrialConfig tc = trial_config(c);
        tc.record_distance_trace = true;
        const TrialResult r = run_trial(tc, data, seed);
        double running = r.distance_trace.front();
        bool monotone = true;
        for (double dist : r.distance_trace) {
          const double next = std::min(running, dist);
          monotone = monotone && next <= running;
          running = next;
        }
        const double initial = r.distance_trace.front();
        per_seed[i] = {monotone && running < kContractionFraction * initial,
                       "seed " + std::to_string(seed) + ": min distance " + num(running) + " of initial " +
                           num(initial)};
      });
      for (const auto& [ok, detail] : per_seed) {
        checks.push_back({"running min non-increasing and below 5% of initial", ok, detail});
      }
      return finish(6, "Contraction without attacks", checks);
    }
    case 7: {
      std::vector<Check> checks;
      const Finals ref_clean = finals(ctx.runs(with(reg, DefenseKind::aflguard, AttackKind::none)));
      ExperimentConfig small = with(reg, DefenseKind::aflguard, AttackKind::none);
      small.defense.lambda = kSmallLambda;
      const Finals tight = finals(ctx.runs(small));
      checks.push_back({"lambda 0.1: mse >= 2x lambda 1.5 or >= 50% rejected",
                        avg(tight.primary) >= kSmallLambdaMseFactor * avg(ref_clean.primary) ||
                            avg(tight.reject_rate) >= kSmallLambdaRejectRate,
                        "mse " + num(avg(tight.primary)) + " vs " + num(avg(ref_clean.primary)) +
                            ", rejected " + num(avg(tight.reject_rate))});
      const Finals ref_gd = finals(ctx.runs(with(reg, DefenseKind::aflguard, AttackKind::gradient_deviation)));
      ExperimentConfig large = with(reg, DefenseKind::aflguard, AttackKind::gradient_deviation);
      large.defense.lambda = kLargeLambda;
      const Finals loose = finals(ctx.runs(large));
      checks.push_back({"lambda 50 under gd: mse >= 10x lambda 1.5",
                        avg(loose.primary) >= kLargeLambdaMseFactor * avg(ref_gd.primary),
                        "mse " + list(loose.primary) + " vs " + num(avg(ref_gd.primary))});
      return finish(7, "Lambda regime", checks);
    }
    case 8: {
      std::vector<Check> checks;
      for (const char* m : {"vecmath", "tasks", "attacks", "defenses", "metrics"}) {
        for (auto& c : module_properties(m)) {
          c.name = std::string(m) + ": " + c.name;
          checks.push_back(std::move(c));
        }
      }
      return finish(8, "Filter and module unit suites", checks);
    }
    case 9: {
      std::vector<Check> checks;
      Rng rng(97);
      double worst_reg = 0.0, worst_log = 0.0;
      for (std::size_t k = 0; k < kGradientPoints; ++k) {
        const Dataset r = random_regression(8, 7, rng);
        const ParamVector th = random_vector(7, rng);
        worst_reg = std::max(worst_reg, rel_error(regression_gradient(th, r.examples),
                                                  finite_difference(th, [&](const ParamVector& t) {
                                                    return regression_loss(t, r.examples);
                                                  })));
        const Dataset c = random_classification(8, 5, 4, rng);
        const ParamVector p = random_vector(20, rng);
        worst_log = std::max(worst_log, rel_error(logistic_gradient(p, c.examples, 4),
                                                  finite_difference(p, [&](const ParamVector& q) {
                                                    return logistic_loss(q, c.examples, 4);
                                                  })));
      }
      checks.push_back({"regression gradient vs finite differences on 20 points", worst_reg <= kGradientRelTol,
                        "worst " + num(worst_reg)});
      checks.push_back({"logistic gradient vs finite differences on 20 points", worst_log <= kGradientRelTol,
                        "worst " + num(worst_log)});

      bool medians = true;
      std::uniform_int_distribution<std::size_t> count(1, 9), width(1, 6);
      for (std::size_t k = 0; k < kMedianInstances; ++k) {
        const std::size_t m = count(rng), d = width(rng);
        std::vector<ParamVector> vs;
        for (std::size_t i = 0; i < m; ++i) vs.push_back(random_vector(d, rng));
        ParamVector oracle(d);
        for (std::size_t j = 0; j < d; ++j) {
          std::vector<double> col;
          for (const auto& v : vs) col.push_back(v[j]);
          std::sort(col.begin(), col.end());
          oracle[j] = m % 2 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
        }
        medians = medians && coordinate_median(vs) == oracle;
      }
      checks.push_back({"coordinate_median vs sort oracle on 100 instances", medians, ""});

      const auto pop = gen_synthetic_regression(77, kPopulationSamples, 100);
      const ParamVector theta = random_vector(100, rng, 5.0);
      const ParamVector expected = theta - pop.true_model;
      const double err = rel_error(regression_gradient(theta, pop.data.examples), expected);
      checks.push_back({"Monte-Carlo population gradient = theta - theta* within 5%", err <= kPopulationRelTol,
                        "relative error " + num(err)});
      return finish(9, "Numerical oracles", checks);
    }
    case 10: {
      std::vector<Check> checks;
      const auto root = std::filesystem::temp_directory_path() /
                        ("aflguard_determinism_" + std::to_string(std::hash<std::string>{}(format_config(reg))));
      const auto compare = [&](const std::string& name, ExperimentConfig c) {
        c.seeds.run = ctx.seeds();
        std::filesystem::remove_all(root);
        run(c, root / "a");
        run(c, root / "b");
        bool same = true;
        std::size_t files = 0;
        for (const auto& entry : std::filesystem::directory_iterator(root / "a")) {
          std::ifstream fa(entry.path(), std::ios::binary), fb(root / "b" / entry.path().filename(), std::ios::binary);
          const std::string sa((std::istreambuf_iterator<char>(fa)), {});
          const std::string sb((std::istreambuf_iterator<char>(fb)), {});
          same = same && !sa.empty() && sa == sb;
          ++files;
        }
        std::filesystem::remove_all(root);
        checks.push_back({name + ": repeated run is byte-identical", same && files == ctx.seeds().size() + 1,
                          std::to_string(files) + " files"});
      };
      compare("aflguard/adapt regression", with(reg, DefenseKind::aflguard, AttackKind::adaptive));
      compare("basgd/gd regression", with(reg, DefenseKind::basgd, AttackKind::gradient_deviation));
      compare("kardam/bd classification",
              with(backdoor_classification_defaults(), DefenseKind::kardam, AttackKind::backdoor));
      return finish(10, "Determinism", checks);
    }
    case 11: {
      std::vector<Check> checks;
      const ExperimentConfig cls = backdoor_classification_defaults();
      const Finals async_bd = finals(ctx.runs(with(cls, DefenseKind::asyncsgd, AttackKind::backdoor)));
      checks.push_back({"asyncsgd/bd asr >= 0.5", avg(async_bd.asr) >= kBackdoorMinAsr,
                        "asr " + list(async_bd.asr)});
      const Finals guard_bd = finals(ctx.runs(with(cls, DefenseKind::aflguard, AttackKind::backdoor)));
      const Finals async_clean = finals(ctx.runs(with(cls, DefenseKind::asyncsgd, AttackKind::none)));
      checks.push_back({"aflguard/bd asr <= 0.1", avg(guard_bd.asr) <= kBackdoorMaxAsr, "asr " + list(guard_bd.asr)});
      checks.push_back({"aflguard/bd error <= 1.5x clean asyncsgd error",
                        avg(guard_bd.primary) <= kBackdoorErrorFactor * avg(async_clean.primary),
                        num(avg(guard_bd.primary)) + " vs " + num(avg(async_clean.primary))});
      ExperimentConfig shifted = cls;
      shifted.server.distribution_shift = 1.0;
      const Finals zeno = finals(ctx.runs(with(shifted, DefenseKind::zenopp, AttackKind::none)));
      const Finals guard = finals(ctx.runs(with(shifted, DefenseKind::aflguard, AttackKind::none)));
      checks.push_back({"DS = 1.0: zenopp error > aflguard error", avg(zeno.primary) > avg(guard.primary),
                        num(avg(zeno.primary)) + " vs " + num(avg(guard.primary))});
      return finish(11, "Backdoor and distribution shift on synthetic classification", checks);
    }
    default: throw std::invalid_argument("unknown criterion " + std::to_string(id));
  }
}

int report(const std::vector<CriterionResult>& results, std::ostream& out, bool verbose) {
  int failures = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.title << "\n";
    for (const auto& c : r.checks) {
      if (verbose || !c.passed) {
        out << "        " << (c.passed ? "ok   " : "FAIL ") << c.name;
        if (!c.detail.empty()) out << "  (" << c.detail << ")";
        out << "\n";
      }
    }
    failures += r.passed ? 0 : 1;
  }
  return failures;
}

}  // namespace aflguard::verify
