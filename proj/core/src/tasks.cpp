#include "aflguard/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aflguard/error.hpp"

namespace aflguard {

std::size_t class_label(const Example& ex) {
  if (!(ex.y >= 0.0) || ex.y != std::floor(ex.y)) {
    throw std::invalid_argument("class label must be a non-negative integer, got " +
                                std::to_string(ex.y));
  }
  return static_cast<std::size_t>(ex.y);
}

std::size_t Dataset::feature_dim() const {
  if (examples.empty()) throw std::logic_error("feature_dim of an empty dataset");
  return examples.front().features.dim();
}

void Dataset::validate() const {
  if (kind == TaskKind::classification && num_classes < 2) {
    throw std::invalid_argument("classification dataset needs at least 2 classes");
  }
  if (examples.empty()) return;
  const std::size_t d = feature_dim();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    if (ex.features.dim() != d) {
      throw DimensionError("example " + std::to_string(i) + " has " +
                           std::to_string(ex.features.dim()) + " features, expected " +
                           std::to_string(d));
    }
    if (kind == TaskKind::classification && class_label(ex) >= num_classes) {
      throw std::invalid_argument("example " + std::to_string(i) + " label out of range");
    }
  }
}

Curvature::Curvature(double L, double mu) : smoothness(L), strong_convexity(mu) {
  if (!(mu > 0.0) || !(mu <= L)) throw std::invalid_argument("Curvature requires 0 < mu <= L");
}

namespace {

void require_batch(std::span<const Example> batch, std::size_t feature_dim) {
  if (batch.empty()) throw std::invalid_argument("gradient of an empty batch");
  for (const auto& ex : batch) {
    if (ex.features.dim() != feature_dim) {
      throw DimensionError("feature width " + std::to_string(ex.features.dim()) +
                           " does not match model input width " + std::to_string(feature_dim));
    }
  }
}

std::size_t feature_dim_for(const ParamVector& params, std::size_t num_classes) {
  if (num_classes < 2) throw std::invalid_argument("logistic model needs at least 2 classes");
  if (params.dim() % num_classes != 0) {
    throw DimensionError("parameter length " + std::to_string(params.dim()) +
                         " is not a multiple of the class count");
  }
  return params.dim() / num_classes;
}

// Class scores W x for row-major W.
void class_scores(const ParamVector& params, const ParamVector& features, std::size_t num_classes,
                  std::vector<double>& scores) {
  const std::size_t d = features.dim();
  scores.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += params[c * d + j] * features[j];
    scores[c] = s;
  }
}

// In-place stable softmax; returns log-sum-exp.
double softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : z) v /= total;
  return m + std::log(total);
}

}  // namespace

double regression_loss(const ParamVector& theta, std::span<const Example> batch) {
  require_batch(batch, theta.dim());
  double s = 0.0;
  for (const auto& ex : batch) {
    const double r = dot(ex.features, theta) - ex.y;
    s += 0.5 * r * r;
  }
  return s / static_cast<double>(batch.size());
}

ParamVector regression_gradient(const ParamVector& theta, std::span<const Example> batch) {
  require_batch(batch, theta.dim());
  ParamVector g(theta.dim());
  for (const auto& ex : batch) {
    const double r = dot(ex.features, theta) - ex.y;
    for (std::size_t j = 0; j < g.dim(); ++j) g[j] += r * ex.features[j];
  }
  g *= 1.0 / static_cast<double>(batch.size());
  return g;
}

double regression_predict(const ParamVector& theta, const ParamVector& features) {
  return dot(features, theta);
}

double logistic_loss(const ParamVector& params, std::span<const Example> batch,
                     std::size_t num_classes) {
  const std::size_t d = feature_dim_for(params, num_classes);
  require_batch(batch, d);
  std::vector<double> z;
  double s = 0.0;
  for (const auto& ex : batch) {
    const std::size_t y = class_label(ex);
    if (y >= num_classes) throw std::invalid_argument("class label out of range");
    class_scores(params, ex.features, num_classes, z);
    const double true_score = z[y];
    s += softmax_inplace(z) - true_score;
  }
  return s / static_cast<double>(batch.size());
}

ParamVector logistic_gradient(const ParamVector& params, std::span<const Example> batch,
                              std::size_t num_classes) {
  const std::size_t d = feature_dim_for(params, num_classes);
  require_batch(batch, d);
  ParamVector g(params.dim());
  std::vector<double> p;
  for (const auto& ex : batch) {
    const std::size_t y = class_label(ex);
    if (y >= num_classes) throw std::invalid_argument("class label out of range");
    class_scores(params, ex.features, num_classes, p);
    softmax_inplace(p);
    p[y] -= 1.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) g[c * d + j] += p[c] * ex.features[j];
    }
  }
  g *= 1.0 / static_cast<double>(batch.size());
  return g;
}

std::size_t logistic_predict(const ParamVector& params, const ParamVector& features,
                             std::size_t num_classes) {
  const std::size_t d = feature_dim_for(params, num_classes);
  if (features.dim() != d) throw DimensionError("feature width does not match model");
  std::vector<double> z;
  class_scores(params, features, num_classes, z);
  std::size_t best = 0;
  for (std::size_t c = 1; c < num_classes; ++c) {
    if (z[c] > z[best]) best = c;
  }
  return best;
}

ParamVector task_gradient(TaskKind kind, const ParamVector& params,
                          std::span<const Example> batch, std::size_t num_classes) {
  return kind == TaskKind::regression ? regression_gradient(params, batch)
                                      : logistic_gradient(params, batch, num_classes);
}

std::size_t param_count(TaskKind kind, std::size_t feature_dim, std::size_t num_classes) {
  return kind == TaskKind::regression ? feature_dim : feature_dim * num_classes;
}

}  // namespace aflguard
