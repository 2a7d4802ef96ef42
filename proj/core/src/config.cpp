#include "aflguard/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <type_traits>
#include <sstream>

#include "aflguard/error.hpp"

namespace aflguard {

std::string_view to_string(TaskSource s) {
  switch (s) {
    case TaskSource::synthetic_regression: return "synthetic_regression";
    case TaskSource::synthetic_classification: return "synthetic_classification";
    case TaskSource::csv: return "csv";
  }
  return "?";
}

std::size_t ClientsConfig::num_malicious() const {
  return static_cast<std::size_t>(std::floor(malicious_fraction * static_cast<double>(num_clients)));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::uint64_t parse_uint(std::string_view s, const std::string& field) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError(field + ": expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s, const std::string& field) {
  const auto one = [&](std::string_view part) {
    part = trim(part);
    double v = 0.0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || p != part.data() + part.size() || !std::isfinite(v)) {
      throw ConfigError(field + ": expected a real number, got '" + std::string(s) + "'");
    }
    return v;
  };
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return one(s);
  const double den = one(s.substr(slash + 1));
  if (den == 0.0) throw ConfigError(field + ": division by zero in '" + std::string(s) + "'");
  return one(s.substr(0, slash)) / den;
}

bool parse_bool(std::string_view s, const std::string& field) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(field + ": expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::uint64_t> parse_list(std::string_view s, const std::string& field) {
  std::vector<std::uint64_t> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    out.push_back(parse_uint(trim(s.substr(pos, comma - pos)), field));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <class E>
E parse_enum(std::string_view s, const std::string& field,
             std::initializer_list<std::pair<std::string_view, E>> options) {
  std::string expected;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    expected += (expected.empty() ? "" : "|") + std::string(name);
  }
  throw ConfigError(field + ": unknown value '" + std::string(s) + "' (expected " + expected + ")");
}

struct Field {
  std::string section;
  std::string key;
  std::string type;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view, const std::string&)> set;
};

template <class Member>
Field size_field(std::string section, std::string key, Member member) {
  return Field{section, key, "int",
               [member](const ExperimentConfig& c) { return std::to_string(member(c)); },
               [member](ExperimentConfig& c, std::string_view v, const std::string& f) {
                 member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(
                     parse_uint(v, f));
               }};
}

template <class Member>
Field real_field(std::string section, std::string key, Member member) {
  return Field{section, key, "real",
               [member](const ExperimentConfig& c) { return fmt_real(member(c)); },
               [member](ExperimentConfig& c, std::string_view v, const std::string& f) {
                 member(c) = parse_real(v, f);
               }};
}

// Accessors take a const or non-const config through a forwarding lambda.
#define AFL_MEMBER(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back({"task", "kind", "string",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.task.source)); },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.task.source = parse_enum<TaskSource>(
                       v, n,
                       {{"synthetic_regression", TaskSource::synthetic_regression},
                        {"synthetic_classification", TaskSource::synthetic_classification},
                        {"csv", TaskSource::csv}});
                 }});
    f.push_back({"task", "csv_path", "string",
                 [](const ExperimentConfig& c) { return c.task.csv_path; },
                 [](ExperimentConfig& c, std::string_view v, const std::string&) {
                   c.task.csv_path = std::string(v);
                 }});
    f.push_back(size_field("task", "num_samples", AFL_MEMBER(task.num_samples)));
    f.push_back(size_field("task", "dim", AFL_MEMBER(task.dim)));
    f.push_back(size_field("task", "train_count", AFL_MEMBER(task.train_count)));
    f.push_back(real_field("task", "theta_std", AFL_MEMBER(task.theta_std)));
    f.push_back(size_field("task", "num_classes", AFL_MEMBER(task.num_classes)));
    f.push_back(real_field("task", "class_separation", AFL_MEMBER(task.class_separation)));
    f.push_back(real_field("task", "trigger_offset", AFL_MEMBER(task.trigger_offset)));

    f.push_back(size_field("clients", "num_clients", AFL_MEMBER(clients.num_clients)));
    f.push_back(real_field("clients", "malicious_fraction", AFL_MEMBER(clients.malicious_fraction)));
    f.push_back({"clients", "partition", "string",
                 [](const ExperimentConfig& c) {
                   return std::string(c.clients.partition == PartitionMode::iid ? "iid" : "noniid");
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.clients.partition = parse_enum<PartitionMode>(
                       v, n, {{"iid", PartitionMode::iid}, {"noniid", PartitionMode::noniid}});
                 }});
    f.push_back(real_field("clients", "noniid_degree", AFL_MEMBER(clients.noniid_degree)));

    f.push_back({"attack", "kind", "string",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.attack.kind)); },
                 [](ExperimentConfig& c, std::string_view v, const std::string&) {
                   c.attack.kind = parse_attack_kind(v);
                 }});
    f.push_back({"attack", "knowledge", "string",
                 [](const ExperimentConfig& c) {
                   return std::string(c.knowledge == KnowledgeScope::full ? "full" : "partial");
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.knowledge = parse_enum<KnowledgeScope>(
                       v, n, {{"full", KnowledgeScope::full}, {"partial", KnowledgeScope::partial}});
                 }});
    f.push_back(real_field("attack", "gauss_sigma", AFL_MEMBER(attack.gauss_sigma)));
    f.push_back(real_field("attack", "gd_scale", AFL_MEMBER(attack.gd_scale)));
    f.push_back(size_field("attack", "bd_trigger_period", AFL_MEMBER(attack.bd_trigger_period)));
    f.push_back(size_field("attack", "bd_target_class", AFL_MEMBER(attack.bd_target_class)));
    f.push_back(real_field("attack", "bd_replication_fraction",
                           AFL_MEMBER(attack.bd_replication_fraction)));
    f.push_back(real_field("attack", "bd_scale_factor", AFL_MEMBER(attack.bd_scale_factor)));
    f.push_back(size_field("attack", "adaptive_gamma_iters", AFL_MEMBER(attack.adaptive_gamma_iters)));

    f.push_back({"defense", "kind", "string",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.defense.kind)); },
                 [](ExperimentConfig& c, std::string_view v, const std::string&) {
                   c.defense.kind = parse_defense_kind(v);
                 }});
    f.push_back(real_field("defense", "lambda", AFL_MEMBER(defense.lambda)));
    f.push_back(size_field("defense", "num_buffers", AFL_MEMBER(defense.num_buffers)));

    f.push_back(size_field("schedule", "total_iterations", AFL_MEMBER(schedule.total_iterations)));
    f.push_back(real_field("schedule", "learning_rate", AFL_MEMBER(schedule.learning_rate)));
    f.push_back(size_field("schedule", "max_client_delay", AFL_MEMBER(schedule.max_client_delay)));
    f.push_back(
        size_field("schedule", "server_refresh_period", AFL_MEMBER(schedule.server_refresh_period)));
    f.push_back(size_field("schedule", "batch_size", AFL_MEMBER(schedule.batch_size)));
    f.push_back({"schedule", "update_reduction", "string",
                 [](const ExperimentConfig& c) {
                   return std::string(c.schedule.reduction == UpdateReduction::sum ? "sum" : "mean");
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.schedule.reduction = parse_enum<UpdateReduction>(
                       v, n, {{"sum", UpdateReduction::sum}, {"mean", UpdateReduction::mean}});
                 }});
    f.push_back(size_field("schedule", "metric_interval", AFL_MEMBER(schedule.metric_interval)));

    f.push_back(size_field("server", "trusted_size", AFL_MEMBER(server.size)));
    f.push_back(real_field("server", "distribution_shift", AFL_MEMBER(server.distribution_shift)));

    f.push_back(size_field("seeds", "data_seed", AFL_MEMBER(seeds.data_seed)));
    f.push_back({"seeds", "run", "list",
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (auto s : c.seeds.run) out += (out.empty() ? "" : ",") + std::to_string(s);
                   return out;
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.seeds.run = parse_list(v, n);
                 }});
    f.push_back({"seeds", "resample_data", "bool",
                 [](const ExperimentConfig& c) {
                   return std::string(c.seeds.resample_data ? "true" : "false");
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.seeds.resample_data = parse_bool(v, n);
                 }});

    f.push_back({"metrics", "mse_reference", "string",
                 [](const ExperimentConfig& c) {
                   return std::string(c.mse_reference == MseReference::noiseless ? "noiseless"
                                                                                 : "observed");
                 },
                 [](ExperimentConfig& c, std::string_view v, const std::string& n) {
                   c.mse_reference = parse_enum<MseReference>(
                       v, n,
                       {{"noiseless", MseReference::noiseless}, {"observed", MseReference::observed}});
                 }});
    return f;
  }();
  return all;
}

#undef AFL_MEMBER

}  // namespace

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (task.source == TaskSource::csv && task.csv_path.empty()) {
    fail("task.csv_path: required when task.kind = csv");
  }
  if (task.source != TaskSource::csv) {
    if (task.num_samples < 2) fail("task.num_samples must be >= 2");
    if (task.dim == 0) fail("task.dim must be >= 1");
    if (task.train_count == 0 || task.train_count >= task.num_samples) {
      fail("task.train_count must be in [1, task.num_samples)");
    }
  } else if (task.train_count == 0) {
    fail("task.train_count must be >= 1");
  }
  if (!(task.theta_std > 0.0)) fail("task.theta_std must be > 0");
  if (task.source == TaskSource::synthetic_classification) {
    if (task.num_classes < 2) fail("task.num_classes must be >= 2");
    if (!(task.class_separation > 0.0)) fail("task.class_separation must be > 0");
    if (task.trigger_offset < 0.0) fail("task.trigger_offset must be >= 0");
  }
  if (clients.num_clients == 0) fail("clients.num_clients must be >= 1");
  if (!(clients.malicious_fraction >= 0.0 && clients.malicious_fraction < 1.0)) {
    fail("clients.malicious_fraction must be in [0, 1)");
  }
  if (clients.noniid_degree < 0.0 || clients.noniid_degree > 1.0) {
    fail("clients.noniid_degree must be in [0, 1]");
  }
  if (clients.partition == PartitionMode::noniid && task.source == TaskSource::synthetic_regression) {
    fail("clients.partition: noniid needs a classification task");
  }
  attack.validate();
  if (attack.kind == AttackKind::backdoor && task.source == TaskSource::synthetic_regression) {
    fail("attack.kind: bd needs a classification task");
  }
  if (task.source == TaskSource::synthetic_classification &&
      attack.bd_target_class >= task.num_classes) {
    fail("attack.bd_target_class must be < task.num_classes");
  }
  defense.validate();
  if (schedule.total_iterations == 0) fail("schedule.total_iterations must be >= 1");
  if (!(schedule.learning_rate > 0.0)) fail("schedule.learning_rate must be > 0");
  if (schedule.server_refresh_period == 0) fail("schedule.server_refresh_period must be >= 1");
  if (schedule.batch_size == 0) fail("schedule.batch_size must be >= 1");
  if (schedule.metric_interval == 0) fail("schedule.metric_interval must be >= 1");
  if (server.size == 0) fail("server.trusted_size must be >= 1");
  if (server.distribution_shift < 0.0 || server.distribution_shift > 1.0) {
    fail("server.distribution_shift must be in [0, 1]");
  }
  if (seeds.run.empty()) fail("seeds.run must list at least one seed");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& origin) {
  ExperimentConfig cfg;
  std::set<std::string> sections;
  for (const auto& f : fields()) sections.insert(f.section);
  std::set<std::string> seen;
  std::string section;
  const std::string where = origin.empty() ? std::string("config") : origin.string();

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto at = [&](const std::string& msg) {
      return ConfigError(where + ":" + std::to_string(line_no) + ": " + msg);
    };

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw at("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.contains(section)) throw at("unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw at("expected '<type> <key> = <value>'");
    const std::string_view lhs = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto sp = lhs.find_first_of(" \t");
    if (sp == std::string_view::npos) throw at("missing type before key '" + std::string(lhs) + "'");
    const std::string type(trim(lhs.substr(0, sp)));
    const std::string key(trim(lhs.substr(sp)));
    if (section.empty()) throw at("key '" + key + "' outside any section");
    const std::string name = section + "." + key;

    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) field = &f;
    }
    if (!field) throw at("unknown key '" + name + "'");
    if (type != field->type) {
      throw at(name + ": declared type '" + type + "' but the key is " + field->type);
    }
    if (!seen.insert(name).second) throw at("duplicate key '" + name + "'");
    try {
      field->set(cfg, value, name);
    } catch (const ConfigError& e) {
      throw at(e.what());
    }
  }

  if (cfg.task.source == TaskSource::csv && !origin.empty() && !cfg.task.csv_path.empty()) {
    std::filesystem::path p(cfg.task.csv_path);
    if (p.is_relative()) cfg.task.csv_path = (origin.parent_path() / p).string();
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::vector<ConfigEntry> config_entries(const ExperimentConfig& cfg) {
  std::vector<ConfigEntry> out;
  for (const auto& f : fields()) out.push_back({f.section, f.key, f.type, f.get(cfg)});
  return out;
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : config_entries(cfg)) {
    if (e.section != section) {
      if (!section.empty()) out += '\n';
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += e.type + " " + e.key + " = " + e.value + "\n";
  }
  return out;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"malicious_fraction", "lambda",       "tau_max",
                                                "tau_s",              "trusted_size", "ds",
                                                "num_clients"};
  return axes;
}

void apply_axis(ExperimentConfig& cfg, std::string_view axis, double value) {
  const auto as_count = [&](std::string_view name) {
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw ConfigError(std::string(name) + ": sweep value " + fmt_real(value) +
                        " is not a non-negative integer");
    }
    return static_cast<std::size_t>(value);
  };
  if (axis == "malicious_fraction") cfg.clients.malicious_fraction = value;
  else if (axis == "lambda") cfg.defense.lambda = value;
  else if (axis == "tau_max") cfg.schedule.max_client_delay = as_count(axis);
  else if (axis == "tau_s") cfg.schedule.server_refresh_period = as_count(axis);
  else if (axis == "trusted_size") cfg.server.size = as_count(axis);
  else if (axis == "ds") cfg.server.distribution_shift = value;
  else if (axis == "num_clients") cfg.clients.num_clients = as_count(axis);
  else {
    std::string known;
    for (const auto& a : sweep_axes()) known += (known.empty() ? "" : ", ") + a;
    throw ConfigError("unknown sweep axis '" + std::string(axis) + "' (expected one of " + known + ")");
  }
  cfg.validate();
}

TrialConfig trial_config(const ExperimentConfig& cfg) {
  TrialConfig t;
  t.schedule = cfg.schedule;
  t.defense = cfg.defense;
  t.attack = cfg.attack;
  t.num_malicious = cfg.clients.num_malicious();
  t.knowledge = cfg.knowledge;
  t.mse_reference = cfg.mse_reference;
  return t;
}

}  // namespace aflguard
