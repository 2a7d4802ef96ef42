#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "aflguard/config.hpp"
#include "aflguard/harness.hpp"

namespace aflguard::verify {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::vector<Check> checks;
};

// Thresholds of the acceptance criteria.
inline constexpr double kRobustMse = 0.05;
inline constexpr double kRobustMee = 0.40;
inline constexpr double kGaussGapFactor = 5.0;
inline constexpr double kKardamGdMinMse = 5.0;
inline constexpr double kZenoMaxMse = 0.06;
inline constexpr double kNoAttackParityFactor = 1.5;
inline constexpr double kHighMaliciousFraction = 0.45;
inline constexpr double kHighMaliciousMaxMse = 0.06;
inline constexpr double kContractionFraction = 0.05;
inline constexpr double kSmallLambda = 0.1;
inline constexpr double kSmallLambdaMseFactor = 2.0;
inline constexpr double kSmallLambdaRejectRate = 0.5;
inline constexpr double kLargeLambda = 50.0;
inline constexpr double kLargeLambdaMseFactor = 10.0;
inline constexpr double kBackdoorMinAsr = 0.5;
inline constexpr double kBackdoorMaxAsr = 0.1;
inline constexpr double kBackdoorErrorFactor = 1.5;
inline constexpr double kGradientRelTol = 1e-5;
inline constexpr std::size_t kGradientPoints = 20;
inline constexpr std::size_t kMedianInstances = 100;
inline constexpr std::size_t kPopulationSamples = 100000;
inline constexpr double kPopulationRelTol = 0.05;

/// Built-in experiment configurations used by the acceptance criteria.
ExperimentConfig synthetic_regression_defaults();
ExperimentConfig backdoor_classification_defaults();

/// Runs and memoizes experiments so criteria sharing a configuration pay once.
class Context {
 public:
  explicit Context(std::vector<std::uint64_t> seeds = {1, 2, 3});

  const std::vector<SeedRun>& runs(const ExperimentConfig& cfg);
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

 private:
  std::vector<std::uint64_t> seeds_;
  std::mutex mutex_;
  std::map<std::string, std::vector<SeedRun>> cache_;
};

CriterionResult criterion(int id, Context& ctx);
std::vector<int> criterion_ids();

/// Module property suites (vecmath, tasks, data, attacks, defenses, engine, metrics, cli).
std::vector<Check> module_properties(const std::string& module);
std::vector<std::string> modules();

/// Prints one line per criterion and per failing check; returns the number of failures.
int report(const std::vector<CriterionResult>& results, std::ostream& out, bool verbose);

}  // namespace aflguard::verify
