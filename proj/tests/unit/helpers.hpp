#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "aflguard/dataset.hpp"
#include "aflguard/vecmath.hpp"

namespace testutil {

using aflguard::Dataset;
using aflguard::Example;
using aflguard::ParamVector;
using aflguard::TaskKind;

inline ParamVector randn(std::size_t dim, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return ParamVector(std::move(v));
}

inline Dataset regression_set(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  Dataset ds;
  std::normal_distribution<double> noise;
  for (std::size_t i = 0; i < n; ++i) ds.examples.push_back({randn(dim, rng), noise(rng)});
  return ds;
}

inline Dataset class_set(std::size_t n, std::size_t dim, std::size_t classes, std::mt19937_64& rng) {
  Dataset ds{TaskKind::classification, classes, {}};
  std::uniform_int_distribution<std::size_t> label(0, classes - 1);
  for (std::size_t i = 0; i < n; ++i) ds.examples.push_back({randn(dim, rng), double(label(rng))});
  return ds;
}

// Central finite differences, step 1e-6.
template <class F>
std::vector<double> numeric_gradient(std::vector<double> x, F&& f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace testutil
