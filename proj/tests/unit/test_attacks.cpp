#include <doctest.h>

#include "aflguard/attacks.hpp"
#include "aflguard/error.hpp"
#include "helpers.hpp"

using namespace aflguard;
using testutil::randn;

namespace {

// Acceptance test written out directly.
bool inside(const ParamVector& g, const ParamVector& gs, double lambda) {
  double diff = 0, ref = 0;
  for (std::size_t i = 0; i < g.dim(); ++i) diff += (g[i] - gs[i]) * (g[i] - gs[i]), ref += gs[i] * gs[i];
  return std::sqrt(diff) <= lambda * std::sqrt(ref);
}

}  // namespace

TEST_SUITE("attacks") {
  TEST_CASE("names round trip") {
    for (auto k : {AttackKind::none, AttackKind::label_flip, AttackKind::gaussian, AttackKind::gradient_deviation,
                   AttackKind::backdoor, AttackKind::adaptive})
      CHECK(parse_attack_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_attack_kind("sign-flip"), ConfigError);
  }

  TEST_CASE("config validation") {
    AttackConfig c;
    CHECK_NOTHROW(c.validate());
    c.gd_scale = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.gauss_sigma = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.bd_replication_fraction = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("label flip") {
    CHECK(flip_label(1, 10) == 8);
    CHECK(flip_label(5, 6) == 0);
    for (std::size_t y = 0; y < 9; ++y) CHECK(flip_label(flip_label(y, 9), 9) == y);
    CHECK_THROWS_AS(flip_label(9, 9), std::out_of_range);
    Dataset reg;
    reg.examples.push_back({{1, 2}, 3.5});
    CHECK(flip_labels(reg).examples[0].y == -3.5);
  }

  TEST_CASE("gaussian") {
    Rng rng(1);
    const std::size_t N = 10000, d = 100;
    std::vector<double> s(d, 0), s2(d, 0);
    for (std::size_t k = 0; k < N; ++k) {
      const auto v = gaussian_update(d, 200, rng);
      for (std::size_t j = 0; j < d; ++j) s[j] += v[j], s2[j] += v[j] * v[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double m = s[j] / N;
      CHECK(std::abs(m) <= 8.0);
      CHECK(std::sqrt(s2[j] / N - m * m) == doctest::Approx(200).epsilon(0.05));
    }
    Rng a(2), b(2);
    CHECK(gaussian_update(5, 200, a) == gaussian_update(5, 200, b));
  }

  TEST_CASE("gradient deviation") {
    std::mt19937_64 rng(3);
    CHECK(gradient_deviation_update({1, 2}, -10) == ParamVector{-10, -20});
    CHECK(gradient_deviation_update(ParamVector(2), -10) == ParamVector(2));
    const auto h = randn(7, rng);
    CHECK(l2norm(gradient_deviation_update(h, -10)) == doctest::Approx(10 * l2norm(h)));
    CHECK(cosine(h, gradient_deviation_update(h, -10)) == doctest::Approx(-1.0));
    CHECK_THROWS(gradient_deviation_update(h, 0.5));
  }

  TEST_CASE("backdoor") {
    std::mt19937_64 rng(4);
    const auto local = testutil::class_set(80, 50, 4, rng);
    AttackConfig cfg;
    cfg.bd_replication_fraction = 10.0 / 80;
    cfg.bd_target_class = 3;
    const auto out = backdoor_poison(local, cfg);
    REQUIRE(out.size() == 90);
    for (std::size_t i = 0; i < 80; ++i) CHECK(out.examples[i].features == local.examples[i].features);
    for (std::size_t i = 80; i < 90; ++i) {
      CHECK(out.examples[i].y == 3);
      for (std::size_t j = 0; j < 50; ++j) {
        if (j % 20 == 0) CHECK(out.examples[i].features[j] == 0.0);
        else CHECK(out.examples[i].features[j] == local.examples[i - 80].features[j]);
      }
    }
    CHECK_THROWS(backdoor_poison(testutil::regression_set(4, 3, rng), cfg));

    cfg.bd_scale_factor = 1;
    const auto h = randn(3, rng);
    CHECK(backdoor_update(h, cfg) == h);
    cfg.bd_scale_factor = 5;
    CHECK(backdoor_update({1, 0}, cfg) == ParamVector{5, 0});
    CHECK(l2norm(backdoor_update(h, cfg)) == doctest::Approx(5 * l2norm(h)));
  }

  TEST_CASE("adaptive: reversal reaches the ball boundary") {
    std::mt19937_64 rng(5);
    const auto gs = randn(8, rng);
    AttackConfig cfg;
    const double tol = 10 * l2norm(gs) / std::pow(2.0, 30);
    CHECK(std::abs(adaptive_gamma({ParamVector(8), gs, gs, 1.5}, cfg) - 1.5 * l2norm(gs)) <= tol);
    CHECK(adaptive_gamma({ParamVector(8), gs, gs, 0.0}, cfg) == 0.0);
    CHECK(adaptive_update({ParamVector(8), gs, gs, 0.0}, cfg) == gs);
  }

  TEST_CASE("adaptive: feasibility and maximality") {
    std::mt19937_64 rng(6);
    AttackConfig cfg;
    int probed = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto gs = randn(10, rng);
      const auto gbar = gs + randn(10, rng, 0.4 * l2norm(gs) / std::sqrt(10.0));
      REQUIRE(inside(gbar, gs, 1.5));
      const ThreatKnowledge k{ParamVector(10), gbar, gs, 1.5};
      const auto out = adaptive_update(k, cfg);
      CHECK(inside(out, gs, 1.5));
      const double gamma = adaptive_gamma(k, cfg);
      const auto s = (1.0 / l2norm(gbar)) * gbar;
      for (std::size_t j = 0; j < 10; ++j) CHECK(out[j] == doctest::Approx(gbar[j] - gamma * s[j]));
      if (gamma < 10 * l2norm(gs)) {
        ++probed;
        CHECK_FALSE(inside(axpy(-1e-3 * l2norm(gs), s, out), gs, 1.5));
      }
    }
    CHECK(probed > 100);
  }

  TEST_CASE("adaptive: infeasible benign mean is sent as is") {
    const ThreatKnowledge k{ParamVector(2), ParamVector{-4, 0}, ParamVector{1, 0}, 1.5};
    CHECK(adaptive_update(k, AttackConfig{}) == ParamVector{-4, 0});
    CHECK_THROWS(adaptive_update({ParamVector(2), ParamVector(2), ParamVector{1, 0}, 1.5}, AttackConfig{}));
    CHECK_THROWS(adaptive_update({ParamVector(2), ParamVector{1, 0}, ParamVector(2), 1.5}, AttackConfig{}));
  }

  TEST_CASE("adaptive: cap at ten times the server norm") {
    // A huge radius makes every gamma feasible.
    const ThreatKnowledge k{ParamVector(2), ParamVector{1, 0}, ParamVector{1, 0}, 100.0};
    CHECK(adaptive_gamma(k, AttackConfig{}) == 10.0);
  }
}
