#include "aflguard/metrics.hpp"

#include <stdexcept>
#include <vector>

#include "aflguard/tasks.hpp"

namespace aflguard {

double mse(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw std::invalid_argument("mse: lists must be nonempty and of equal length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

double mee(const ParamVector& estimate, const ParamVector& true_model) {
  return distance(estimate, true_model);
}

double regression_mse(const ParamVector& theta, const Dataset& test,
                      const ParamVector* noiseless_reference_model) {
  std::vector<double> pred;
  std::vector<double> truth;
  pred.reserve(test.size());
  truth.reserve(test.size());
  for (const auto& ex : test.examples) {
    pred.push_back(regression_predict(theta, ex.features));
    truth.push_back(noiseless_reference_model ? regression_predict(*noiseless_reference_model, ex.features)
                                              : ex.y);
  }
  return mse(pred, truth);
}

double test_error_rate(const ParamVector& params, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("test_error_rate: empty test set");
  std::size_t wrong = 0;
  for (const auto& ex : test.examples) {
    if (logistic_predict(params, ex.features, test.num_classes) != class_label(ex)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

double attack_success_rate(const ParamVector& params, const Dataset& clean_test,
                           const AttackConfig& cfg) {
  std::size_t eligible = 0;
  std::size_t hits = 0;
  for (const auto& ex : clean_test.examples) {
    if (class_label(ex) == cfg.bd_target_class) continue;
    ParamVector x = ex.features;
    embed_trigger(x, cfg.bd_trigger_period);
    ++eligible;
    if (logistic_predict(params, x, clean_test.num_classes) == cfg.bd_target_class) ++hits;
  }
  if (eligible == 0) throw std::invalid_argument("attack_success_rate: no eligible test inputs");
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

}  // namespace aflguard
