#include <doctest.h>

#include "aflguard/metrics.hpp"
#include "aflguard/tasks.hpp"
#include "helpers.hpp"

using namespace aflguard;

TEST_SUITE("metrics") {
  TEST_CASE("mse") {
    const std::vector<double> a{1, -2, 3};
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(std::vector<double>{0, 1}, std::vector<double>{1, 1}) == 0.5);
    std::mt19937_64 rng(1);
    const auto p = testutil::randn(40, rng), t = testutil::randn(40, rng);
    double s = 0;
    for (std::size_t i = 0; i < 40; ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
    CHECK(mse(p.span(), t.span()) == doctest::Approx(s / 40).epsilon(1e-12));
    CHECK_THROWS(mse(std::vector<double>{}, std::vector<double>{}));
    CHECK_THROWS(mse(std::vector<double>{1}, std::vector<double>{1, 2}));
  }

  TEST_CASE("mee") {
    std::mt19937_64 rng(2);
    const auto t = testutil::randn(6, rng), o = testutil::randn(6, rng);
    CHECK(mee(t, t) == 0.0);
    auto e = t;
    e[2] += 1;
    CHECK(mee(e, t) == doctest::Approx(1.0));
    CHECK(mee(o, t) == mee(t, o));
    CHECK_THROWS(mee(t, ParamVector(5)));
  }

  TEST_CASE("regression mse reference") {
    Dataset test;
    test.examples.push_back({{1, 0}, 5.0});
    test.examples.push_back({{0, 1}, -1.0});
    const ParamVector truth{4, -1}, theta{4, 0};
    CHECK(regression_mse(theta, test, nullptr) == doctest::Approx((1.0 + 1.0) / 2));
    CHECK(regression_mse(theta, test, &truth) == doctest::Approx(0.5));
  }

  TEST_CASE("test error rate") {
    Dataset two{TaskKind::classification, 2, {}};
    for (int i = 0; i < 8; ++i) two.examples.push_back({{1, 1}, double(i % 2)});
    CHECK(test_error_rate(ParamVector(4), two) == 0.5);
    Dataset three{TaskKind::classification, 3, {}};
    for (int c = 0; c < 3; ++c) {
      ParamVector f(3);
      f[c] = 2;
      three.examples.push_back({f, double(c)});
    }
    ParamVector eye(9);
    for (int c = 0; c < 3; ++c) eye[c * 3 + c] = 1;
    CHECK(test_error_rate(eye, three) == 0.0);
    std::mt19937_64 rng(3);
    const auto ds = testutil::class_set(60, 5, 4, rng);
    const auto w = testutil::randn(20, rng);
    int wrong = 0;
    for (const auto& ex : ds.examples) wrong += logistic_predict(w, ex.features, 4) != std::size_t(ex.y);
    CHECK(test_error_rate(w, ds) == doctest::Approx(wrong / 60.0));
    CHECK_THROWS(test_error_rate(w, Dataset{TaskKind::classification, 4, {}}));
  }

  TEST_CASE("attack success rate") {
    std::mt19937_64 rng(4);
    const auto ds = testutil::class_set(60, 45, 3, rng);
    AttackConfig cfg;
    cfg.bd_target_class = 0;
    CHECK(attack_success_rate(ParamVector(135), ds, cfg) == 1.0);
    cfg.bd_target_class = 2;
    CHECK(attack_success_rate(ParamVector(135), ds, cfg) == 0.0);

    const auto w = testutil::randn(135, rng);
    int eligible = 0, hits = 0;
    for (const auto& ex : ds.examples) {
      if (ex.y == 2) continue;
      ++eligible;
      auto f = ex.features;
      f[0] = f[20] = f[40] = 0;
      hits += logistic_predict(w, f, 3) == 2;
    }
    CHECK(attack_success_rate(w, ds, cfg) == doctest::Approx(double(hits) / eligible));

    Dataset only_target{TaskKind::classification, 3, {{ParamVector(45), 2.0}}};
    CHECK_THROWS(attack_success_rate(w, only_target, cfg));
  }
}
