#pragma once

#include <cstddef>
#include <string_view>

#include "aflguard/data.hpp"
#include "aflguard/dataset.hpp"
#include "aflguard/vecmath.hpp"

namespace aflguard {

enum class AttackKind { none, label_flip, gaussian, gradient_deviation, backdoor, adaptive };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double gauss_sigma = 200.0;
  double gd_scale = -10.0;
  std::size_t bd_trigger_period = 20;
  std::size_t bd_target_class = 0;
  double bd_replication_fraction = 0.25;
  double bd_scale_factor = 5.0;
  std::size_t adaptive_gamma_iters = 30;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

/// What a full-knowledge attacker sees when crafting one update.
struct ThreatKnowledge {
  ParamVector base_model;            // stale global model the update is computed on
  ParamVector benign_mean_gradient;  // expected honest update at base_model
  ParamVector server_update;         // current g_s
  double lambda = 1.5;               // AFLGuard acceptance radius
};

std::size_t flip_label(std::size_t label, std::size_t num_classes);

/// Regression counterpart of label flipping: the response is reflected.
inline double flip_response(double y) { return -y; }

/// Applies the label-flip attack to every example of a client's local data.
Dataset flip_labels(const Dataset& local);

ParamVector gaussian_update(std::size_t dim, double sigma, Rng& rng);

ParamVector gradient_deviation_update(const ParamVector& honest, double scale);

/// Zeroes features 0, period, 2*period, ...
void embed_trigger(ParamVector& features, std::size_t period);

/// local plus round(fraction * |local|) triggered copies relabelled to the target class.
Dataset backdoor_poison(const Dataset& local, const AttackConfig& cfg);

ParamVector backdoor_update(const ParamVector& honest_on_poisoned, const AttackConfig& cfg);

/// Reversal length for the adaptive attack: the largest gamma in
/// [0, 10 * ||g_s||] such that g_bar - gamma * g_bar/||g_bar|| still passes the
/// AFLGuard test against g_s, located by bisection. Returns 0 when even the
/// unmodified benign mean fails the test.
double adaptive_gamma(const ThreatKnowledge& knowledge, const AttackConfig& cfg);

ParamVector adaptive_update(const ThreatKnowledge& knowledge, const AttackConfig& cfg);

}  // namespace aflguard
