#include "aflguard/defenses.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "aflguard/error.hpp"

namespace aflguard {

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::accept: return "accept";
    case Decision::reject: return "reject";
    case Decision::buffered: return "buffered";
  }
  return "?";
}

bool aflguard_accept(const ParamVector& client_update, const ParamVector& server_update,
                     double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("aflguard_accept: lambda must be >= 0");
  return distance(client_update, server_update) <= lambda * l2norm(server_update);
}

Verdict asyncsgd_step(const ParamVector& update) { return Verdict::accept(update); }

Verdict zeno_step(const ParamVector& client_update, const ParamVector& server_update) {
  require_same_dim(client_update, server_update);
  const double server_norm = l2norm(server_update);
  if (server_norm == 0.0) throw std::invalid_argument("zeno_step: zero server update");
  const double client_norm = l2norm(client_update);
  if (client_norm == 0.0) return Verdict::reject();
  if (!(cosine(client_update, server_update) > 0.0)) return Verdict::reject();
  return Verdict::accept((server_norm / client_norm) * client_update);
}

// --- Kardam ------------------------------------------------------------------

namespace {

double median_of(std::vector<double> xs) {
  const std::size_t n = xs.size();
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (n % 2 == 1) return *mid;
  return 0.5 * (*std::max_element(xs.begin(), mid) + *mid);
}

}  // namespace

Verdict KardamState::step(std::size_t client_id, const ParamVector& update,
                          const ParamVector& base_model) {
  require_same_dim(update, base_model);

  std::optional<double> k;
  auto it = clients_.find(client_id);
  if (it != clients_.end()) {
    require_same_dim(update, it->second.update);
    const double denom = distance(base_model, it->second.base_model);
    if (denom > 0.0) k = distance(update, it->second.update) / denom;
  }

  std::vector<double> others;
  others.reserve(clients_.size());
  for (const auto& [id, rec] : clients_) {
    if (id != client_id && rec.coefficient) others.push_back(*rec.coefficient);
  }

  // no usable history keeps the previous coefficient so the median stays populated
  std::optional<double> stored = k;
  if (!stored && it != clients_.end()) stored = it->second.coefficient;
  clients_.insert_or_assign(client_id, ClientRecord{update, base_model, stored});

  if (!k || others.empty()) return Verdict::accept(update);
  return *k <= median_of(std::move(others)) ? Verdict::accept(update) : Verdict::reject();
}

void KardamState::set_record(std::size_t client_id, ClientRecord record) {
  if (record.coefficient && *record.coefficient < 0.0) {
    throw std::invalid_argument("Kardam coefficients are nonnegative");
  }
  clients_.insert_or_assign(client_id, std::move(record));
}

const KardamState::ClientRecord* KardamState::record(std::size_t client_id) const {
  auto it = clients_.find(client_id);
  return it == clients_.end() ? nullptr : &it->second;
}

std::size_t KardamState::defined_coefficients() const {
  return static_cast<std::size_t>(std::count_if(clients_.begin(), clients_.end(), [](const auto& kv) {
    return kv.second.coefficient.has_value();
  }));
}

// --- BASGD -------------------------------------------------------------------

BasgdState::BasgdState(std::size_t num_buffers) : buffers_(num_buffers) {
  if (num_buffers == 0) throw std::invalid_argument("BASGD needs at least one buffer");
}

std::size_t BasgdState::buffered_count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : buffers_) n += b.size();
  return n;
}

Verdict BasgdState::step(std::size_t client_id, const ParamVector& update) {
  for (const auto& b : buffers_) {
    if (!b.empty()) require_same_dim(b.front(), update);
  }
  buffers_[client_id % buffers_.size()].push_back(update);
  const bool all_filled =
      std::all_of(buffers_.begin(), buffers_.end(), [](const auto& b) { return !b.empty(); });
  if (!all_filled) return Verdict::buffered(update);

  std::vector<ParamVector> means;
  means.reserve(buffers_.size());
  for (const auto& b : buffers_) means.push_back(mean(b));
  for (auto& b : buffers_) b.clear();
  return Verdict::accept(coordinate_median(means));
}

// --- dispatch ----------------------------------------------------------------

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::asyncsgd: return "asyncsgd";
    case DefenseKind::kardam: return "kardam";
    case DefenseKind::basgd: return "basgd";
    case DefenseKind::zenopp: return "zenopp";
    case DefenseKind::aflguard: return "aflguard";
  }
  return "?";
}

DefenseKind parse_defense_kind(std::string_view name) {
  for (auto k : {DefenseKind::asyncsgd, DefenseKind::kardam, DefenseKind::basgd,
                 DefenseKind::zenopp, DefenseKind::aflguard}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("defense.kind: unknown defense '" + std::string(name) +
                    "' (expected asyncsgd|kardam|basgd|zenopp|aflguard)");
}

void DefenseConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("defense.lambda must be > 0");
  if (num_buffers == 0) throw ConfigError("defense.num_buffers must be >= 1");
}

namespace {

class AsyncSgdDefense final : public Defense {
 public:
  Verdict on_update(const UpdateContext& ctx) override { return asyncsgd_step(ctx.update); }
  DefenseKind kind() const noexcept override { return DefenseKind::asyncsgd; }
};

class AflguardDefense final : public Defense {
 public:
  explicit AflguardDefense(double lambda) : lambda_(lambda) {}
  Verdict on_update(const UpdateContext& ctx) override {
    return aflguard_accept(ctx.update, ctx.server_update, lambda_) ? Verdict::accept(ctx.update)
                                                                   : Verdict::reject();
  }
  DefenseKind kind() const noexcept override { return DefenseKind::aflguard; }
  bool uses_server_update() const noexcept override { return true; }

 private:
  double lambda_;
};

class ZenoDefense final : public Defense {
 public:
  Verdict on_update(const UpdateContext& ctx) override {
    return zeno_step(ctx.update, ctx.server_update);
  }
  DefenseKind kind() const noexcept override { return DefenseKind::zenopp; }
  bool uses_server_update() const noexcept override { return true; }
};

class KardamDefense final : public Defense {
 public:
  Verdict on_update(const UpdateContext& ctx) override {
    return state_.step(ctx.client_id, ctx.update, ctx.base_model);
  }
  DefenseKind kind() const noexcept override { return DefenseKind::kardam; }

 private:
  KardamState state_;
};

class BasgdDefense final : public Defense {
 public:
  explicit BasgdDefense(std::size_t buffers) : state_(buffers) {}
  Verdict on_update(const UpdateContext& ctx) override {
    return state_.step(ctx.client_id, ctx.update);
  }
  DefenseKind kind() const noexcept override { return DefenseKind::basgd; }

 private:
  BasgdState state_;
};

}  // namespace

std::unique_ptr<Defense> make_defense(const DefenseConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case DefenseKind::asyncsgd: return std::make_unique<AsyncSgdDefense>();
    case DefenseKind::kardam: return std::make_unique<KardamDefense>();
    case DefenseKind::basgd: return std::make_unique<BasgdDefense>(cfg.num_buffers);
    case DefenseKind::zenopp: return std::make_unique<ZenoDefense>();
    case DefenseKind::aflguard: return std::make_unique<AflguardDefense>(cfg.lambda);
  }
  throw std::logic_error("unreachable defense kind");
}

}  // namespace aflguard
