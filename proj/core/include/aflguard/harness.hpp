#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "aflguard/config.hpp"
#include "aflguard/engine.hpp"

namespace aflguard {

std::string_view version();

/// Seed of the dataset used by the trial with `run_seed`.
std::uint64_t data_seed_for(const ExperimentConfig& cfg, std::uint64_t run_seed);

/// Generates or loads the data, splits it, partitions it over the clients and
/// draws the trusted set. Synthetic regression also carries theta*.
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t data_seed);

struct SeedRun {
  std::uint64_t seed = 0;
  TaskKind kind = TaskKind::regression;
  bool has_true_model = false;
  TrialResult result;
};

/// Prepares the data for `seed` and runs one trial on it.
SeedRun run_one(const ExperimentConfig& cfg, std::uint64_t seed);

/// One trial per seed, executed concurrently; results come back in seed-list order.
std::vector<SeedRun> run_seeds(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds);

/// Per-trial CSV: '#' lines with version, seeds and the full config, then a
/// header and one row per checkpoint.
std::string trial_csv(const ExperimentConfig& cfg, const SeedRun& run);

/// Final metrics per seed plus mean and sample standard deviation.
std::string summary_json(const ExperimentConfig& cfg, const std::vector<SeedRun>& runs);

/// Runs every seed of cfg.seeds.run, writes trial_<seed>.csv and summary.json. Returns 0.
int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// One run per axis value into <out>/<axis>_<value>/, plus the long-format
/// sweep.csv keyed by (value, seed, iteration).
int sweep(const ExperimentConfig& cfg, std::string_view axis, const std::vector<double>& values,
          const std::filesystem::path& out_dir);

/// Writes train.csv and test.csv (and theta_star.csv for synthetic regression)
/// for the first run seed.
int gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Calls fn(i) for i in [0, count) on up to hardware_concurrency threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// CSV rendering of a metric value: shortest round-trip decimal, "inf" when non-finite.
std::string format_metric(double v);

}  // namespace aflguard
