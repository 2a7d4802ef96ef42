#include "aflguard/engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "aflguard/data.hpp"
#include "aflguard/tasks.hpp"

namespace aflguard {

std::size_t PreparedData::param_count() const {
  return aflguard::param_count(kind, feature_dim, num_classes);
}

void ModelHistory::push(std::size_t iteration, const ParamVector& model) {
  if (!models_.empty() && iteration != newest() + 1) {
    throw std::logic_error("ModelHistory: iterations must be pushed consecutively");
  }
  if (models_.empty()) first_iteration_ = iteration;
  models_.push_back(model);
  while (models_.size() > capacity_) {
    models_.pop_front();
    ++first_iteration_;
  }
}

const ParamVector& ModelHistory::at(std::size_t iteration) const {
  if (models_.empty() || iteration < first_iteration_ || iteration > newest()) {
    throw std::out_of_range("ModelHistory: model of iteration " + std::to_string(iteration) +
                            " is not retained");
  }
  return models_[iteration - first_iteration_];
}

std::size_t ModelHistory::oldest() const { return first_iteration_; }

std::size_t ModelHistory::newest() const {
  if (models_.empty()) throw std::logic_error("ModelHistory: empty");
  return first_iteration_ + models_.size() - 1;
}

GlobalState::GlobalState(ParamVector initial, std::size_t max_client_delay)
    : theta(std::move(initial)), history(max_client_delay + 1), server_update(theta.dim()) {
  history.push(0, theta);
}

bool is_divergent(double metric_value) noexcept {
  return !std::isfinite(metric_value) || metric_value > kDivergenceThreshold;
}

namespace {

double client_scale(const Schedule& s, std::size_t batch) {
  return s.reduction == UpdateReduction::sum ? static_cast<double>(batch) : 1.0;
}

ParamVector full_gradient(const PreparedData& data, const ParamVector& params, const Dataset& ds) {
  return task_gradient(data.kind, params, ds.examples, data.num_classes);
}

ParamVector server_update_at(const PreparedData& data, const TrialConfig& cfg,
                             const ParamVector& theta) {
  ParamVector g = full_gradient(data, theta, data.trusted);
  if (cfg.schedule.reduction == UpdateReduction::sum) g *= static_cast<double>(data.trusted.size());
  return g;
}

MetricRecord measure(const PreparedData& data, const TrialConfig& cfg, const ParamVector& theta,
                     std::size_t iteration) {
  MetricRecord r;
  r.iteration = iteration;
  if (data.kind == TaskKind::regression) {
    const ParamVector* reference =
        (cfg.mse_reference == MseReference::noiseless && data.true_model) ? &*data.true_model
                                                                          : nullptr;
    r.primary = regression_mse(theta, data.test, reference);
    if (data.true_model) r.mee = mee(theta, *data.true_model);
  } else {
    r.primary = test_error_rate(theta, data.test);
    if (cfg.attack.kind == AttackKind::backdoor) {
      r.attack_success_rate = attack_success_rate(theta, data.test, cfg.attack);
    }
  }
  return r;
}

void validate(const TrialConfig& cfg, const PreparedData& data) {
  cfg.defense.validate();
  cfg.attack.validate();
  const Schedule& s = cfg.schedule;
  if (s.total_iterations == 0) throw std::invalid_argument("run_trial: total_iterations must be >= 1");
  if (s.server_refresh_period == 0) throw std::invalid_argument("run_trial: tau_s must be >= 1");
  if (!(s.learning_rate > 0.0)) throw std::invalid_argument("run_trial: learning rate must be > 0");
  if (s.batch_size == 0) throw std::invalid_argument("run_trial: batch_size must be >= 1");
  if (s.metric_interval == 0) throw std::invalid_argument("run_trial: metric_interval must be >= 1");
  if (data.clients.empty()) throw std::invalid_argument("run_trial: no clients");
  if (cfg.num_malicious >= data.clients.size()) {
    throw std::invalid_argument("run_trial: at least one client must be benign");
  }
  for (std::size_t i = 0; i < data.clients.size(); ++i) {
    if (data.clients[i].empty()) {
      throw std::invalid_argument("run_trial: client " + std::to_string(i) + " has no data");
    }
  }
  if (data.trusted.empty() || data.test.empty()) {
    throw std::invalid_argument("run_trial: trusted and test sets must be nonempty");
  }
  const bool needs_classes = cfg.attack.kind == AttackKind::backdoor;
  if (needs_classes && data.kind != TaskKind::classification) {
    throw std::invalid_argument("run_trial: the backdoor attack needs a classification task");
  }
}

}  // namespace

ThreatKnowledge make_threat_knowledge(const GlobalState& state, std::size_t base_iteration,
                                      std::span<const Dataset> knowledge_clients,
                                      const PreparedData& data, const TrialConfig& config) {
  if (knowledge_clients.empty()) throw std::invalid_argument("make_threat_knowledge: empty scope");
  const ParamVector& base = state.history.at(base_iteration);
  ParamVector sum(base.dim());
  for (const auto& client : knowledge_clients) sum += full_gradient(data, base, client);
  const double batch = static_cast<double>(config.schedule.batch_size);
  sum *= client_scale(config.schedule, static_cast<std::size_t>(batch)) /
         static_cast<double>(knowledge_clients.size());
  return ThreatKnowledge{base, std::move(sum), state.server_update, config.defense.lambda};
}

TrialResult run_trial(const TrialConfig& cfg, const PreparedData& data, std::uint64_t seed) {
  validate(cfg, data);
  const Schedule& sched = cfg.schedule;
  const std::size_t n = data.clients.size();
  const std::size_t dim = data.param_count();

  // Malicious clients train on their own modified copy of local data.
  std::vector<Dataset> malicious_local;
  malicious_local.reserve(cfg.num_malicious);
  for (std::size_t i = 0; i < cfg.num_malicious; ++i) {
    switch (cfg.attack.kind) {
      case AttackKind::label_flip: malicious_local.push_back(flip_labels(data.clients[i])); break;
      case AttackKind::backdoor:
        malicious_local.push_back(backdoor_poison(data.clients[i], cfg.attack));
        break;
      default: malicious_local.push_back(data.clients[i]); break;
    }
  }
  const std::span<const Dataset> knowledge_scope =
      cfg.knowledge == KnowledgeScope::full
          ? std::span<const Dataset>(data.clients)
          : std::span<const Dataset>(data.clients).first(std::max<std::size_t>(cfg.num_malicious, 1));

  auto defense = make_defense(cfg.defense);
  GlobalState state(ParamVector(dim), sched.max_client_delay);
  Rng rng(seed);

  TrialResult result;
  const auto record = [&](std::size_t iteration) {
    MetricRecord r = measure(data, cfg, state.theta, iteration);
    r.accepted = result.accepted;
    r.rejected = result.rejected;
    r.buffered = result.buffered;
    result.records.push_back(r);
  };
  const auto trace = [&] {
    if (cfg.record_distance_trace && data.true_model) {
      result.distance_trace.push_back(distance(state.theta, *data.true_model));
    }
  };

  record(0);
  trace();

  std::vector<Example> batch;
  for (std::size_t t = 0; t < sched.total_iterations; ++t) {
    if (t % sched.server_refresh_period == 0) {
      state.server_update = server_update_at(data, cfg, state.theta);
      state.server_update_iteration = t;
    }

    const std::size_t client = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t max_delay = std::min(sched.max_client_delay, t);
    const std::size_t delay = std::uniform_int_distribution<std::size_t>(0, max_delay)(rng);
    const std::size_t base_iteration = t - delay;
    const ParamVector& base = state.history.at(base_iteration);

    const bool malicious = client < cfg.num_malicious && cfg.attack.kind != AttackKind::none;
    const Dataset& local = malicious ? malicious_local[client] : data.clients[client];

    const auto local_batch_update = [&] {
      const std::size_t b = std::min(sched.batch_size, local.size());
      batch.clear();
      for (std::size_t idx : minibatch_indices(local.size(), b, rng)) {
        batch.push_back(local.examples[idx]);
      }
      ParamVector g = task_gradient(data.kind, base, batch, data.num_classes);
      g *= client_scale(sched, b);
      return g;
    };

    ParamVector update(dim);
    if (!malicious) {
      update = local_batch_update();
    } else {
      switch (cfg.attack.kind) {
        case AttackKind::label_flip: update = local_batch_update(); break;
        case AttackKind::gaussian: update = gaussian_update(dim, cfg.attack.gauss_sigma, rng); break;
        case AttackKind::gradient_deviation:
          update = gradient_deviation_update(local_batch_update(), cfg.attack.gd_scale);
          break;
        case AttackKind::backdoor: update = backdoor_update(local_batch_update(), cfg.attack); break;
        case AttackKind::adaptive: {
          ThreatKnowledge k = make_threat_knowledge(state, base_iteration, knowledge_scope, data, cfg);
          if (l2norm(k.benign_mean_gradient) > 0.0 && l2norm(k.server_update) > 0.0) {
            update = adaptive_update(k, cfg.attack);
          } else {
            update = std::move(k.benign_mean_gradient);
          }
          break;
        }
        case AttackKind::none: break;
      }
    }

    const Verdict verdict = defense->on_update({client, update, base, state.server_update});
    switch (verdict.decision) {
      case Decision::accept:
        ++result.accepted;
        state.theta = axpy(-sched.learning_rate, *verdict.effective_update, state.theta);
        break;
      case Decision::reject: ++result.rejected; break;
      case Decision::buffered: ++result.buffered; break;
    }
    state.iteration = t + 1;
    state.history.push(state.iteration, state.theta);

    if (!state.theta.all_finite()) {
      result.diverged = true;
      result.diverged_at = state.iteration;
      MetricRecord r;
      r.iteration = state.iteration;
      r.primary = std::numeric_limits<double>::infinity();
      if (data.true_model) r.mee = std::numeric_limits<double>::infinity();
      r.accepted = result.accepted;
      r.rejected = result.rejected;
      r.buffered = result.buffered;
      result.records.push_back(r);
      if (cfg.record_distance_trace && data.true_model) {
        result.distance_trace.push_back(std::numeric_limits<double>::infinity());
      }
      break;
    }
    trace();
    if (state.iteration % sched.metric_interval == 0 || state.iteration == sched.total_iterations) {
      record(state.iteration);
    }
  }

  result.final_model = state.theta;
  return result;
}

}  // namespace aflguard
