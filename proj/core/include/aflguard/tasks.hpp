#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "aflguard/dataset.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard {

struct RegressionTask {
  std::size_t dim = 0;
  std::optional<ParamVector> true_model;  // known for synthetic data only
};

/// Multinomial logistic regression. Parameters are a flat vector of
/// `num_classes` rows of `dim` weights (row-major by class).
struct LogisticTask {
  std::size_t dim = 0;
  std::size_t num_classes = 0;

  std::size_t param_count() const noexcept { return dim * num_classes; }
};

/// L-smooth, mu-strongly convex population risk.
struct Curvature {
  double smoothness = 1.0;        // L
  double strong_convexity = 1.0;  // mu

  Curvature(double L, double mu);

  /// Largest step for which plain gradient descent contracts: 2 / (mu + L).
  double max_contractive_step() const noexcept { return 2.0 / (strong_convexity + smoothness); }
};

/// Linear model with unit-variance isotropic Gaussian features has L = mu = 1.
inline const Curvature kSyntheticRegressionCurvature{1.0, 1.0};

// --- linear regression, loss (<u,theta> - y)^2 / 2 --------------------------

double regression_loss(const ParamVector& theta, std::span<const Example> batch);
ParamVector regression_gradient(const ParamVector& theta, std::span<const Example> batch);
double regression_predict(const ParamVector& theta, const ParamVector& features);

// --- softmax cross-entropy --------------------------------------------------

double logistic_loss(const ParamVector& params, std::span<const Example> batch,
                     std::size_t num_classes);
ParamVector logistic_gradient(const ParamVector& params, std::span<const Example> batch,
                              std::size_t num_classes);
/// Argmax of class scores; ties go to the lowest class index.
std::size_t logistic_predict(const ParamVector& params, const ParamVector& features,
                             std::size_t num_classes);

/// Averaged gradient for whichever model family `kind` names.
ParamVector task_gradient(TaskKind kind, const ParamVector& params,
                          std::span<const Example> batch, std::size_t num_classes);

/// Parameter count for a model on `feature_dim` inputs.
std::size_t param_count(TaskKind kind, std::size_t feature_dim, std::size_t num_classes);

}  // namespace aflguard
