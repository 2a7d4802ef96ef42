#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aflguard/attacks.hpp"
#include "aflguard/data.hpp"
#include "aflguard/defenses.hpp"
#include "aflguard/engine.hpp"

namespace aflguard {

enum class TaskSource { synthetic_regression, synthetic_classification, csv };

std::string_view to_string(TaskSource s);

struct TaskConfig {
  TaskSource source = TaskSource::synthetic_regression;
  std::string csv_path;             // csv only; relative paths resolve against the config file
  std::size_t num_samples = 10000;  // synthetic only
  std::size_t dim = 100;
  std::size_t train_count = 8000;   // the rest is the test set
  double theta_std = 5.0;           // regression
  std::size_t num_classes = 6;      // classification
  double class_separation = 0.35;
  double trigger_offset = 2.0;
};

struct ClientsConfig {
  std::size_t num_clients = 100;
  double malicious_fraction = 0.2;
  PartitionMode partition = PartitionMode::iid;
  double noniid_degree = 0.5;

  /// First floor(fraction * n) client ids are malicious.
  std::size_t num_malicious() const;
};

struct SeedConfig {
  std::uint64_t data_seed = 1;
  std::vector<std::uint64_t> run = {1, 2, 3};
  // Regenerate the dataset per run seed so the spread across seeds includes
  // the draw of theta*; otherwise every seed shares one dataset.
  bool resample_data = true;
};

struct ExperimentConfig {
  TaskConfig task;
  ClientsConfig clients;
  AttackConfig attack;
  KnowledgeScope knowledge = KnowledgeScope::full;
  DefenseConfig defense;
  Schedule schedule;
  TrustedSetSpec server;
  SeedConfig seeds;
  MseReference mse_reference = MseReference::noiseless;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Text format, one entry per line:
///
///   [section]
///   <type> <key> = <value>      # type is int, real, string, bool or list
///
/// Reals accept "a/b". Lists are comma separated integers. Unknown sections or
/// keys, a type that does not match the key, and duplicates are errors.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& origin = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& cfg);

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string type;
  std::string value;
};

std::vector<ConfigEntry> config_entries(const ExperimentConfig& cfg);

/// Sweep axes: malicious_fraction, lambda, tau_max, tau_s, trusted_size, ds, num_clients.
const std::vector<std::string>& sweep_axes();
void apply_axis(ExperimentConfig& cfg, std::string_view axis, double value);

TrialConfig trial_config(const ExperimentConfig& cfg);

}  // namespace aflguard
