#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "aflguard/attacks.hpp"
#include "aflguard/dataset.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard {

struct MetricRecord {
  std::size_t iteration = 0;
  double primary = 0.0;  // MSE (regression) or test error rate (classification)
  std::optional<double> mee;
  std::optional<double> attack_success_rate;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t buffered = 0;
};

double mse(std::span<const double> predictions, std::span<const double> truths);

/// Model estimation error ||estimate - true_model||.
double mee(const ParamVector& estimate, const ParamVector& true_model);

double test_error_rate(const ParamVector& params, const Dataset& test);

/// Fraction of triggered test inputs (clean label != target) classified as the target.
/// Throws if no test input is eligible.
double attack_success_rate(const ParamVector& params, const Dataset& clean_test,
                           const AttackConfig& cfg);

/// Regression MSE of `theta` on `test`. With a true model the reference is the
/// noiseless response <u, theta*>; without one it is the observed label.
double regression_mse(const ParamVector& theta, const Dataset& test,
                      const ParamVector* noiseless_reference_model);

}  // namespace aflguard
