#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aflguard/vecmath.hpp"

namespace aflguard {

enum class Decision { accept, reject, buffered };

std::string_view to_string(Decision d);

struct Verdict {
  Decision decision = Decision::reject;
  std::optional<ParamVector> effective_update;  // present iff decision != reject

  static Verdict accept(ParamVector update) { return {Decision::accept, std::move(update)}; }
  static Verdict reject() { return {Decision::reject, std::nullopt}; }
  /// Holds the update that was parked; the model does not move.
  static Verdict buffered(ParamVector update) { return {Decision::buffered, std::move(update)}; }

  /// Whether the global model moves on this verdict.
  bool applies() const noexcept { return decision == Decision::accept; }
};

/// AFLGuard acceptance test: ||client - server|| <= lambda * ||server||.
bool aflguard_accept(const ParamVector& client_update, const ParamVector& server_update,
                     double lambda);

Verdict asyncsgd_step(const ParamVector& update);

/// Zeno++ as a cosine sign test plus norm matching to the server update.
/// Throws std::invalid_argument for a zero server update.
Verdict zeno_step(const ParamVector& client_update, const ParamVector& server_update);

/// Per-client empirical Lipschitz filter.
class KardamState {
 public:
  struct ClientRecord {
    ParamVector update;
    ParamVector base_model;
    std::optional<double> coefficient;
  };

  /// Coefficient K = ||update - prev_update|| / ||base - prev_base||; accepts
  /// iff K <= median of the other clients' defined coefficients. Clients
  /// without usable history are accepted and recorded.
  Verdict step(std::size_t client_id, const ParamVector& update, const ParamVector& base_model);

  /// Seeds a client's stored coefficient (tests, warm starts).
  void set_record(std::size_t client_id, ClientRecord record);

  const ClientRecord* record(std::size_t client_id) const;
  std::size_t defined_coefficients() const;

 private:
  std::unordered_map<std::size_t, ClientRecord> clients_;
};

/// Buffered median-of-means aggregation.
class BasgdState {
 public:
  explicit BasgdState(std::size_t num_buffers);

  /// Appends to buffer (client_id mod B). Once every buffer holds at least one
  /// update, emits the coordinate median of the buffer means and clears all buffers.
  Verdict step(std::size_t client_id, const ParamVector& update);

  std::size_t num_buffers() const noexcept { return buffers_.size(); }
  std::size_t buffered_count() const noexcept;
  const std::vector<std::vector<ParamVector>>& buffers() const noexcept { return buffers_; }

 private:
  std::vector<std::vector<ParamVector>> buffers_;
};

enum class DefenseKind { asyncsgd, kardam, basgd, zenopp, aflguard };

std::string_view to_string(DefenseKind kind);
DefenseKind parse_defense_kind(std::string_view name);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::aflguard;
  double lambda = 1.5;           // AFLGuard
  std::size_t num_buffers = 10;  // BASGD

  void validate() const;
};

/// Everything a server-side filter may look at for one arriving update.
struct UpdateContext {
  std::size_t client_id;
  const ParamVector& update;
  const ParamVector& base_model;
  const ParamVector& server_update;
};

/// Uniform interface the training loop dispatches to. Implementations that
/// keep state (Kardam, BASGD) own it for exactly one trial.
class Defense {
 public:
  virtual ~Defense() = default;
  virtual Verdict on_update(const UpdateContext& ctx) = 0;
  virtual DefenseKind kind() const noexcept = 0;
  /// Whether the filter reads the trusted-data server update.
  virtual bool uses_server_update() const noexcept { return false; }
};

std::unique_ptr<Defense> make_defense(const DefenseConfig& cfg);

}  // namespace aflguard
