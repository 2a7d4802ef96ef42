#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aflguard/vecmath.hpp"

namespace aflguard {

enum class TaskKind { regression, classification };

/// One training/test point. `y` is the real response for regression and the
/// class index (stored exactly as an integral double) for classification.
struct Example {
  ParamVector features;
  double y = 0.0;
};

std::size_t class_label(const Example& ex);

struct Dataset {
  TaskKind kind = TaskKind::regression;
  std::size_t num_classes = 0;  // classification only
  std::vector<Example> examples;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  std::size_t feature_dim() const;

  /// Same kind and class count, no examples.
  Dataset empty_like() const { return Dataset{kind, num_classes, {}}; }

  // Throws if labels or feature widths are inconsistent with the declared kind.
  void validate() const;
};

}  // namespace aflguard
