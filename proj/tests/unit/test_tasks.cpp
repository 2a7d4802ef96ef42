#include <doctest.h>

#include "aflguard/data.hpp"
#include "aflguard/tasks.hpp"
#include "helpers.hpp"

using namespace aflguard;
using testutil::randn;

namespace {

double sq_loss(const std::vector<double>& th, const Dataset& ds) {
  double s = 0;
  for (const auto& ex : ds.examples) {
    double r = -ex.y;
    for (std::size_t j = 0; j < th.size(); ++j) r += ex.features[j] * th[j];
    s += r * r / 2;
  }
  return s / ds.size();
}

double ce_loss(const std::vector<double>& w, const Dataset& ds, std::size_t C) {
  const std::size_t d = ds.feature_dim();
  double s = 0;
  for (const auto& ex : ds.examples) {
    std::vector<double> z(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < d; ++j) z[c] += w[c * d + j] * ex.features[j];
    double mx = *std::max_element(z.begin(), z.end()), den = 0;
    for (double v : z) den += std::exp(v - mx);
    s += -(z[static_cast<std::size_t>(ex.y)] - mx - std::log(den));
  }
  return s / ds.size();
}

}  // namespace

TEST_SUITE("tasks") {
  TEST_CASE("regression gradient examples") {
    std::mt19937_64 rng(1);
    const auto theta = randn(5, rng), u = randn(5, rng);
    const std::vector<Example> clean{{u, dot(u, theta)}};
    CHECK(l2norm(regression_gradient(theta, clean)) == 0.0);
    const std::vector<Example> one{{{1, 0}, 0.0}};
    CHECK(regression_gradient({1, 0}, one) == ParamVector{1, 0});
    CHECK_THROWS(regression_gradient({1, 0}, std::span<const Example>{}));
    const std::vector<Example> wide{{{1, 0, 0}, 0.0}};
    CHECK_THROWS(regression_gradient({1, 0}, wide));
  }

  TEST_CASE("regression gradient vs finite differences") {
    std::mt19937_64 rng(2);
    for (int point = 0; point < 20; ++point) {
      const auto ds = testutil::regression_set(5, 6, rng);
      const auto th = randn(6, rng);
      const auto fd = testutil::numeric_gradient(th.components(), [&](const auto& x) { return sq_loss(x, ds); });
      CHECK(testutil::rel_err(regression_gradient(th, ds.examples).components(), fd) <= 1e-6);
    }
  }

  TEST_CASE("regression gradient is linear in the residual") {
    std::mt19937_64 rng(3);
    const auto ds = testutil::regression_set(7, 4, rng);
    const auto th = randn(4, rng);
    Dataset scaled = ds;
    for (auto& ex : scaled.examples) ex.y *= -2.5;
    const auto a = regression_gradient(-2.5 * th, scaled.examples);
    const auto b = -2.5 * regression_gradient(th, ds.examples);
    for (std::size_t j = 0; j < 4; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
  }

  TEST_CASE("regression predict") {
    std::mt19937_64 rng(4);
    CHECK(regression_predict(ParamVector(3), randn(3, rng)) == 0.0);
    const auto th = randn(3, rng), u = randn(3, rng);
    CHECK(regression_predict(th, u) == doctest::Approx(u[0] * th[0] + u[1] * th[1] + u[2] * th[2]));
    CHECK_THROWS(regression_predict(th, ParamVector(2)));
  }

  TEST_CASE("logistic gradient examples") {
    const std::vector<Example> one{{{2, -1}, 1.0}};
    CHECK(logistic_gradient(ParamVector(4), one, 2) == ParamVector{1.0, -0.5, -1.0, 0.5});
    std::mt19937_64 rng(5);
    const auto ds = testutil::class_set(1, 4, 5, rng);
    const auto g = logistic_gradient(randn(20, rng), ds.examples, 5);
    for (std::size_t j = 0; j < 4; ++j) {
      double col = 0;
      for (std::size_t c = 0; c < 5; ++c) col += g[c * 4 + j];
      CHECK(std::abs(col) <= 1e-12);
    }
    const std::vector<Example> bad{{{1, 1}, 3.0}};
    CHECK_THROWS(logistic_gradient(ParamVector(4), bad, 2));
    CHECK_THROWS(logistic_gradient(ParamVector(4), std::span<const Example>{}, 2));
  }

  TEST_CASE("logistic gradient vs finite differences") {
    std::mt19937_64 rng(6);
    for (int point = 0; point < 20; ++point) {
      const auto ds = testutil::class_set(5, 4, 3, rng);
      const auto p = randn(12, rng);
      const auto fd = testutil::numeric_gradient(p.components(), [&](const auto& x) { return ce_loss(x, ds, 3); });
      CHECK(testutil::rel_err(logistic_gradient(p, ds.examples, 3).components(), fd) <= 1e-5);
    }
  }

  TEST_CASE("logistic predict") {
    CHECK(logistic_predict(ParamVector(6), {1, 2}, 3) == 0);
    ParamVector p(6);
    p[4] = 1, p[5] = -1;
    CHECK(logistic_predict(p, {1, -1}, 3) == 2);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
      const auto w = randn(12, rng), x = randn(3, rng);
      std::size_t best = 0;
      double top = -1e300;
      for (std::size_t c = 0; c < 4; ++c) {
        const double s = w[c * 3] * x[0] + w[c * 3 + 1] * x[1] + w[c * 3 + 2] * x[2];
        if (s > top) top = s, best = c;
      }
      CHECK(logistic_predict(w, x, 4) == best);
    }
  }

  TEST_CASE("population gradient of the synthetic task is theta - theta*") {
    const auto pop = gen_synthetic_regression(99, 100000, 100);
    std::mt19937_64 rng(8);
    const auto th = randn(100, rng, 5.0);
    // Independent accumulation of (1/N) sum u (u.th - y).
    std::vector<double> g(100, 0.0);
    for (const auto& ex : pop.data.examples) {
      double r = -ex.y;
      for (std::size_t j = 0; j < 100; ++j) r += ex.features[j] * th[j];
      for (std::size_t j = 0; j < 100; ++j) g[j] += r * ex.features[j];
    }
    std::vector<double> want(100);
    for (std::size_t j = 0; j < 100; ++j) g[j] /= 1e5, want[j] = th[j] - pop.true_model[j];
    CHECK(testutil::rel_err(g, want) <= 0.05);
  }

  TEST_CASE("curvature") {
    CHECK(kSyntheticRegressionCurvature.max_contractive_step() == 1.0);
    CHECK(1.0 / 1600 <= kSyntheticRegressionCurvature.max_contractive_step());
    CHECK_THROWS(Curvature(1.0, 2.0));
    CHECK_THROWS(Curvature(1.0, 0.0));
  }
}
