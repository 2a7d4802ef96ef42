#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "aflguard/attacks.hpp"
#include "aflguard/dataset.hpp"
#include "aflguard/defenses.hpp"
#include "aflguard/metrics.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard {

/// How a batch of per-example gradients is reduced into one model update.
/// `sum` multiplies the averaged gradient by the number of examples it covers
/// (client mini-batch or trusted set); `mean` sends the average unchanged.
enum class UpdateReduction { sum, mean };

enum class KnowledgeScope { full, partial };

enum class MseReference { noiseless, observed };

struct Schedule {
  std::size_t max_client_delay = 10;       // tau_max
  std::size_t server_refresh_period = 10;  // tau_s
  std::size_t total_iterations = 2000;     // T
  double learning_rate = 1.0 / 1600.0;     // eta
  std::size_t batch_size = 16;
  UpdateReduction reduction = UpdateReduction::sum;
  std::size_t metric_interval = 50;
};

struct TrialConfig {
  Schedule schedule;
  DefenseConfig defense;
  AttackConfig attack;
  std::size_t num_malicious = 0;  // clients 0 .. num_malicious-1
  KnowledgeScope knowledge = KnowledgeScope::full;
  MseReference mse_reference = MseReference::noiseless;
  bool record_distance_trace = false;  // ||theta^t - theta*|| every iteration
};

/// Datasets a trial reads; immutable and shareable across concurrent trials.
struct PreparedData {
  TaskKind kind = TaskKind::regression;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<Dataset> clients;  // clean local training data, one per client
  Dataset trusted;
  Dataset test;
  std::optional<ParamVector> true_model;

  std::size_t param_count() const;
};

/// Global models of the last `capacity` iterations.
class ModelHistory {
 public:
  explicit ModelHistory(std::size_t capacity) : capacity_(capacity) {}

  void push(std::size_t iteration, const ParamVector& model);
  /// Throws std::out_of_range if the model was evicted or never stored.
  const ParamVector& at(std::size_t iteration) const;
  std::size_t oldest() const;
  std::size_t newest() const;

 private:
  std::size_t capacity_;
  std::size_t first_iteration_ = 0;
  std::deque<ParamVector> models_;
};

struct GlobalState {
  ParamVector theta;
  std::size_t iteration = 0;
  ModelHistory history;
  ParamVector server_update;
  std::size_t server_update_iteration = 0;

  GlobalState(ParamVector initial, std::size_t max_client_delay);
};

struct TrialResult {
  std::vector<MetricRecord> records;
  ParamVector final_model{ParamVector(1)};
  bool diverged = false;  // theta left the finite range
  std::optional<std::size_t> diverged_at;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t buffered = 0;
  std::vector<double> distance_trace;

  const MetricRecord& final_record() const { return records.back(); }
};

/// Values above this are reported the way non-finite ones are ("> 1000").
inline constexpr double kDivergenceThreshold = 1000.0;

bool is_divergent(double metric_value) noexcept;

/// Expected honest update at `base_iteration` over the knowledge scope's
/// local data, in the same units clients send.
ThreatKnowledge make_threat_knowledge(const GlobalState& state, std::size_t base_iteration,
                                      std::span<const Dataset> knowledge_clients,
                                      const PreparedData& data, const TrialConfig& config);

/// Asynchronous training loop: uniform client arrival, uniform staleness in
/// [0, min(tau_max, t)], server update refreshed every tau_s iterations,
/// defense verdict, then theta <- theta - eta * effective_update on accept.
/// Deterministic in (config, data, seed).
TrialResult run_trial(const TrialConfig& config, const PreparedData& data, std::uint64_t seed);

}  // namespace aflguard
