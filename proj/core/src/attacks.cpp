#include "aflguard/attacks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "aflguard/defenses.hpp"
#include "aflguard/error.hpp"

namespace aflguard {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::label_flip: return "lf";
    case AttackKind::gaussian: return "gauss";
    case AttackKind::gradient_deviation: return "gd";
    case AttackKind::backdoor: return "bd";
    case AttackKind::adaptive: return "adapt";
  }
  return "?";
}

AttackKind parse_attack_kind(std::string_view name) {
  for (auto k : {AttackKind::none, AttackKind::label_flip, AttackKind::gaussian,
                 AttackKind::gradient_deviation, AttackKind::backdoor, AttackKind::adaptive}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("attack.kind: unknown attack '" + std::string(name) +
                    "' (expected none|lf|gauss|gd|bd|adapt)");
}

void AttackConfig::validate() const {
  if (!(gauss_sigma > 0.0)) throw ConfigError("attack.gauss_sigma must be > 0");
  if (!(gd_scale < 0.0)) throw ConfigError("attack.gd_scale must be < 0");
  if (bd_trigger_period == 0) throw ConfigError("attack.bd_trigger_period must be >= 1");
  if (!(bd_replication_fraction > 0.0 && bd_replication_fraction <= 1.0)) {
    throw ConfigError("attack.bd_replication_fraction must be in (0, 1]");
  }
  if (!(bd_scale_factor >= 1.0)) throw ConfigError("attack.bd_scale_factor must be >= 1");
  if (adaptive_gamma_iters == 0) throw ConfigError("attack.adaptive_gamma_iters must be >= 1");
}

std::size_t flip_label(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw std::out_of_range("flip_label: label " + std::to_string(label) + " not in [0, " +
                            std::to_string(num_classes) + ")");
  }
  return num_classes - 1 - label;
}

Dataset flip_labels(const Dataset& local) {
  Dataset out = local;
  for (auto& ex : out.examples) {
    ex.y = local.kind == TaskKind::classification
               ? static_cast<double>(flip_label(class_label(ex), local.num_classes))
               : flip_response(ex.y);
  }
  return out;
}

ParamVector gaussian_update(std::size_t dim, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_update: sigma must be > 0");
  std::normal_distribution<double> normal(0.0, sigma);
  ParamVector g(dim);
  for (double& x : g) x = normal(rng);
  return g;
}

ParamVector gradient_deviation_update(const ParamVector& honest, double scale) {
  if (!(scale < 0.0)) throw std::invalid_argument("gradient_deviation_update: scale must be < 0");
  return scale * honest;
}

void embed_trigger(ParamVector& features, std::size_t period) {
  for (std::size_t j = 0; j < features.dim(); j += period) features[j] = 0.0;
}

Dataset backdoor_poison(const Dataset& local, const AttackConfig& cfg) {
  if (local.kind != TaskKind::classification) {
    throw std::invalid_argument("backdoor_poison: requires a classification dataset");
  }
  if (cfg.bd_target_class >= local.num_classes) {
    throw std::invalid_argument("backdoor_poison: target class out of range");
  }
  const auto replicas = static_cast<std::size_t>(
      std::llround(cfg.bd_replication_fraction * static_cast<double>(local.size())));
  Dataset out = local;
  out.examples.reserve(local.size() + replicas);
  for (std::size_t i = 0; i < replicas; ++i) {
    Example ex = local.examples[i];
    embed_trigger(ex.features, cfg.bd_trigger_period);
    ex.y = static_cast<double>(cfg.bd_target_class);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

ParamVector backdoor_update(const ParamVector& honest_on_poisoned, const AttackConfig& cfg) {
  return cfg.bd_scale_factor * honest_on_poisoned;
}

double adaptive_gamma(const ThreatKnowledge& knowledge, const AttackConfig& cfg) {
  const ParamVector& gbar = knowledge.benign_mean_gradient;
  const ParamVector& gs = knowledge.server_update;
  require_same_dim(gbar, gs);
  require_same_dim(gbar, knowledge.base_model);
  const double gbar_norm = l2norm(gbar);
  const double gs_norm = l2norm(gs);
  if (gbar_norm == 0.0 || gs_norm == 0.0) {
    throw std::invalid_argument("adaptive_update: knowledge vectors must be nonzero");
  }
  const ParamVector dir = (1.0 / gbar_norm) * gbar;
  const auto feasible = [&](double gamma) {
    return aflguard_accept(axpy(-gamma, dir, gbar), gs, knowledge.lambda);
  };

  const double gamma_max = 10.0 * gs_norm;
  if (!feasible(0.0)) return 0.0;
  if (feasible(gamma_max)) return gamma_max;
  // The acceptance region is a ball, so its intersection with the ray is an
  // interval starting at 0: feasible(lo) holds, feasible(hi) does not.
  double lo = 0.0;
  double hi = gamma_max;
  for (std::size_t it = 0; it < cfg.adaptive_gamma_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

ParamVector adaptive_update(const ThreatKnowledge& knowledge, const AttackConfig& cfg) {
  const double gamma = adaptive_gamma(knowledge, cfg);
  const ParamVector& gbar = knowledge.benign_mean_gradient;
  return axpy(-gamma / l2norm(gbar), gbar, gbar);
}

}  // namespace aflguard
