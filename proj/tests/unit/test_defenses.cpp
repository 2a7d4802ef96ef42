#include <doctest.h>

#include "aflguard/defenses.hpp"
#include "aflguard/error.hpp"
#include "helpers.hpp"

using namespace aflguard;
using testutil::randn;

TEST_SUITE("defenses") {
  TEST_CASE("aflguard rule") {
    std::mt19937_64 rng(1);
    const auto g = randn(5, rng);
    CHECK(aflguard_accept(g, g, 0.001));
    CHECK_FALSE(aflguard_accept({-1, 0}, {1, 0}, 1.5));
    CHECK(aflguard_accept({2.5, 0}, {1, 0}, 1.5));
    CHECK_FALSE(aflguard_accept({2.5000001, 0}, {1, 0}, 1.5));
    CHECK(aflguard_accept(randn(5, rng), {1, 0, 0, 0, 0}, 1e12));
    CHECK(aflguard_accept(ParamVector(2), ParamVector(2), 1.5));
    CHECK_FALSE(aflguard_accept({0, 1e-12}, ParamVector(2), 1.5));
    CHECK_THROWS_AS(aflguard_accept({1}, {1, 1}, 1.5), DimensionError);
    CHECK_THROWS(aflguard_accept({1}, {1}, -1.0));
  }

  TEST_CASE("aflguard rule is scale equivariant") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    for (int i = 0; i < 500; ++i) {
      const auto a = randn(4, rng), b = randn(4, rng);
      double c = std::exp(2 * n(rng));
      if (i % 2) c = -c;
      CHECK(aflguard_accept(a, b, 1.5) == aflguard_accept(c * a, c * b, 1.5));
    }
  }

  TEST_CASE("kardam bootstrap and median") {
    KardamState k;
    for (std::size_t c = 0; c < 5; ++c) CHECK(k.step(c, {double(c)}, {0}).decision == Decision::accept);
    CHECK(k.defined_coefficients() == 0);
    // Same base model again: zero denominator is bootstrap.
    CHECK(k.step(0, {9}, {0}).decision == Decision::accept);

    const auto seeded = [](double incoming, std::vector<std::size_t> ids) {
      KardamState st;
      const double coefs[] = {0.5, 1.0, 2.0};
      for (int i = 0; i < 3; ++i) st.set_record(ids[i], {ParamVector{0}, ParamVector{0}, coefs[i]});
      st.set_record(ids[3], {ParamVector{0}, ParamVector{0}, std::nullopt});
      return st.step(ids[3], ParamVector{incoming}, ParamVector{1}).decision;
    };
    CHECK(seeded(0.8, {1, 2, 3, 0}) == Decision::accept);
    CHECK(seeded(1.0, {1, 2, 3, 0}) == Decision::accept);
    CHECK(seeded(5.0, {1, 2, 3, 0}) == Decision::reject);
    // Relabelled clients, same outcome.
    CHECK(seeded(0.8, {40, 7, 19, 3}) == Decision::accept);
    CHECK(seeded(5.0, {40, 7, 19, 3}) == Decision::reject);
  }

  TEST_CASE("kardam stores the new history even on reject") {
    KardamState st;
    st.set_record(1, {ParamVector{0}, ParamVector{0}, 0.1});
    st.set_record(0, {ParamVector{0}, ParamVector{0}, std::nullopt});
    CHECK(st.step(0, ParamVector{3}, ParamVector{1}).decision == Decision::reject);
    REQUIRE(st.record(0));
    CHECK(*st.record(0)->coefficient == doctest::Approx(3.0));
    CHECK(st.record(0)->update == ParamVector{3});
  }

  TEST_CASE("basgd buffer lifecycle") {
    BasgdState b2(2);
    const auto v = b2.step(0, {1});
    CHECK(v.decision == Decision::buffered);
    CHECK(v.effective_update.has_value());
    CHECK_FALSE(v.applies());
    CHECK(b2.step(2, {3}).decision == Decision::buffered);
    const auto fired = b2.step(1, {5});
    CHECK(fired.decision == Decision::accept);
    CHECK(*fired.effective_update == ParamVector{3.5});  // median of means {2}, {5}
    CHECK(b2.buffered_count() == 0);

    BasgdState b1(1);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
      const auto u = randn(3, rng);
      const auto r = b1.step(i, u);
      CHECK(r.decision == Decision::accept);
      CHECK(*r.effective_update == u);
    }

    BasgdState b3(3);
    b3.step(0, {0});
    b3.step(3, {1});
    b3.step(1, {2});
    const auto out = b3.step(2, {10});
    CHECK(out.decision == Decision::accept);
    CHECK(*out.effective_update == ParamVector{2});
    CHECK_THROWS(BasgdState(0));
  }

  TEST_CASE("zeno") {
    std::mt19937_64 rng(4);
    const auto gs = randn(6, rng);
    const auto v = zeno_step(3 * gs, gs);
    CHECK(v.decision == Decision::accept);
    for (std::size_t j = 0; j < 6; ++j) CHECK((*v.effective_update)[j] == doctest::Approx(gs[j]));
    CHECK(zeno_step({0, 1}, {1, 0}).decision == Decision::reject);
    CHECK_FALSE(zeno_step({0, 1}, {1, 0}).effective_update.has_value());
    CHECK(zeno_step(-gs, gs).decision == Decision::reject);
    CHECK(zeno_step(ParamVector(6), gs).decision == Decision::reject);
    CHECK_THROWS(zeno_step({1, 0}, {0, 0}));
    for (int i = 0; i < 100; ++i) {
      const auto r = zeno_step(randn(6, rng), gs);
      if (r.applies()) CHECK(l2norm(*r.effective_update) == doctest::Approx(l2norm(gs)).epsilon(1e-12));
    }
  }

  TEST_CASE("asyncsgd") {
    CHECK(*asyncsgd_step({1, 2}).effective_update == ParamVector{1, 2});
    CHECK(asyncsgd_step(ParamVector(2)).applies());
    CHECK(asyncsgd_step({1e15, -1e15}).applies());
  }

  TEST_CASE("factory") {
    for (auto k : {DefenseKind::asyncsgd, DefenseKind::kardam, DefenseKind::basgd, DefenseKind::zenopp,
                   DefenseKind::aflguard}) {
      CHECK(parse_defense_kind(to_string(k)) == k);
      DefenseConfig cfg;
      cfg.kind = k;
      CHECK(make_defense(cfg)->kind() == k);
    }
    CHECK_THROWS_AS(parse_defense_kind("krum"), ConfigError);
    DefenseConfig cfg;
    cfg.lambda = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = {};
    auto guard = make_defense(cfg);
    CHECK(guard->uses_server_update());
    const ParamVector u{1, 0}, gs{1, 0.1}, base(2);
    CHECK(guard->on_update({0, u, base, gs}).applies());
  }
}
