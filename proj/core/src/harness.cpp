#include "aflguard/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aflguard/data.hpp"
#include "aflguard/error.hpp"

#ifndef AFLGUARD_VERSION
#define AFLGUARD_VERSION "0.0.0"
#endif

namespace aflguard {

using nlohmann::ordered_json;

std::string_view version() { return AFLGUARD_VERSION; }

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string primary_name(TaskKind kind) {
  return kind == TaskKind::regression ? "mse" : "test_error_rate";
}

ordered_json metric_json(double v) {
  if (is_divergent(v)) return ">1000";
  return v;
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& e : config_entries(cfg)) {
    ordered_json& slot = j[e.section][e.key];
    if (e.type == "int") {
      slot = std::stoull(e.value);
    } else if (e.type == "real") {
      slot = std::stod(e.value);
    } else if (e.type == "bool") {
      slot = e.value == "true";
    } else if (e.type == "list") {
      slot = ordered_json::array();
      std::stringstream ss(e.value);
      for (std::string item; std::getline(ss, item, ',');) slot.push_back(std::stoull(item));
    } else {
      slot = e.value;
    }
  }
  return j;
}

struct Stat {
  double mean;
  double sd;
};

Stat mean_sd(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return {m, sd};
}

ordered_json aggregate_json(const std::vector<double>& xs) {
  ordered_json j;
  if (std::any_of(xs.begin(), xs.end(), [](double x) { return is_divergent(x); })) {
    j["mean"] = ">1000";
    j["std"] = nullptr;
    return j;
  }
  const Stat s = mean_sd(xs);
  j["mean"] = s.mean;
  if (xs.size() > 1) j["std"] = s.sd;
  else j["std"] = nullptr;
  return j;
}

std::string csv_header(const SeedRun& run, const ExperimentConfig& cfg) {
  std::string h = "iteration," + primary_name(run.kind);
  if (run.has_true_model) h += ",mee";
  if (cfg.attack.kind == AttackKind::backdoor) h += ",attack_success_rate";
  return h + ",accepted,rejected,buffered";
}

std::string csv_row(const MetricRecord& r, bool with_mee, bool with_asr) {
  std::string row = std::to_string(r.iteration) + "," + format_metric(r.primary);
  if (with_mee) row += "," + (r.mee ? format_metric(*r.mee) : std::string());
  if (with_asr) row += "," + (r.attack_success_rate ? format_metric(*r.attack_success_rate) : std::string());
  row += "," + std::to_string(r.accepted) + "," + std::to_string(r.rejected) + "," +
         std::to_string(r.buffered);
  return row;
}

std::string value_label(double v) { return format_metric(v); }

struct LoadedData {
  Dataset full;
  std::optional<ParamVector> true_model;
};

LoadedData load_task_data(const ExperimentConfig& cfg, std::uint64_t data_seed) {
  LoadedData out;
  switch (cfg.task.source) {
    case TaskSource::synthetic_regression: {
      auto gen = gen_synthetic_regression(stream_seed(data_seed, 0), cfg.task.num_samples,
                                          cfg.task.dim, cfg.task.theta_std);
      out.full = std::move(gen.data);
      out.true_model = std::move(gen.true_model);
      break;
    }
    case TaskSource::synthetic_classification: {
      ClassificationMixtureSpec mix;
      mix.num_samples = cfg.task.num_samples;
      mix.dim = cfg.task.dim;
      mix.num_classes = cfg.task.num_classes;
      mix.class_separation = cfg.task.class_separation;
      mix.trigger_offset = cfg.task.trigger_offset;
      mix.trigger_period = cfg.attack.bd_trigger_period;
      out.full = gen_synthetic_classification(stream_seed(data_seed, 0), mix);
      break;
    }
    case TaskSource::csv: out.full = load_csv(cfg.task.csv_path); break;
  }
  if (cfg.task.train_count >= out.full.size()) {
    throw ConfigError("task.train_count: " + std::to_string(cfg.task.train_count) +
                      " leaves no test examples out of " + std::to_string(out.full.size()));
  }
  return out;
}

}  // namespace

std::string format_metric(double v) {
  if (!std::isfinite(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::uint64_t data_seed_for(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  return cfg.seeds.resample_data ? stream_seed(cfg.seeds.data_seed, run_seed) : cfg.seeds.data_seed;
}

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t data_seed) {
  PreparedData out;
  LoadedData loaded = load_task_data(cfg, data_seed);
  const Dataset& full = loaded.full;
  out.true_model = std::move(loaded.true_model);
  if (full.kind == TaskKind::classification && cfg.attack.bd_target_class >= full.num_classes) {
    throw ConfigError("attack.bd_target_class must be < the number of classes");
  }
  if (full.kind == TaskKind::regression &&
      (cfg.attack.kind == AttackKind::backdoor || cfg.clients.partition == PartitionMode::noniid)) {
    throw ConfigError("task: the configured attack or partition needs classification data");
  }

  auto split = split_train_test(full, cfg.task.train_count, stream_seed(data_seed, 1));
  PartitionSpec pspec{cfg.clients.num_clients, cfg.clients.partition, cfg.clients.noniid_degree};
  out.clients = partition(split.train, pspec, stream_seed(data_seed, 2));
  out.trusted = sample_trusted(split.train, cfg.server, stream_seed(data_seed, 3));
  out.kind = full.kind;
  out.num_classes = full.num_classes;
  out.feature_dim = full.feature_dim();
  out.test = std::move(split.test);
  return out;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

SeedRun run_one(const ExperimentConfig& cfg, std::uint64_t seed) {
  const PreparedData data = prepare_data(cfg, data_seed_for(cfg, seed));
  return SeedRun{seed, data.kind, data.true_model.has_value(),
                 run_trial(trial_config(cfg), data, seed)};
}

std::vector<SeedRun> run_seeds(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  std::vector<SeedRun> runs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { runs[i] = run_one(cfg, seeds[i]); });
  return runs;
}

std::string trial_csv(const ExperimentConfig& cfg, const SeedRun& run) {
  std::string out;
  out += "# aflsim " + std::string(version()) + "\n";
  out += "# seed=" + std::to_string(run.seed) + " data_seed=" +
         std::to_string(data_seed_for(cfg, run.seed)) + "\n";
  std::istringstream lines(format_config(cfg));
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) out += "# " + line + "\n";
  }
  out += csv_header(run, cfg) + "\n";
  const bool with_asr = cfg.attack.kind == AttackKind::backdoor;
  for (const auto& r : run.result.records) out += csv_row(r, run.has_true_model, with_asr) + "\n";
  return out;
}

std::string summary_json(const ExperimentConfig& cfg, const std::vector<SeedRun>& runs) {
  ordered_json j;
  j["version"] = std::string(version());
  j["config"] = config_json(cfg);
  j["seeds"] = ordered_json::array();
  for (const auto& r : runs) j["seeds"].push_back(r.seed);

  std::map<std::string, std::vector<double>> finals;
  std::vector<std::string> order;
  const auto add = [&](const std::string& name, double v) {
    if (!finals.contains(name)) order.push_back(name);
    finals[name].push_back(v);
  };

  j["trials"] = ordered_json::array();
  for (const auto& run : runs) {
    const MetricRecord& f = run.result.final_record();
    ordered_json t;
    t["seed"] = run.seed;
    t["data_seed"] = data_seed_for(cfg, run.seed);
    t["final_iteration"] = f.iteration;
    const std::string primary = primary_name(run.kind);
    t[primary] = metric_json(f.primary);
    add(primary, f.primary);
    if (f.mee) {
      t["mee"] = metric_json(*f.mee);
      add("mee", *f.mee);
    }
    if (f.attack_success_rate) {
      t["attack_success_rate"] = *f.attack_success_rate;
      add("attack_success_rate", *f.attack_success_rate);
    }
    t["accepted"] = run.result.accepted;
    t["rejected"] = run.result.rejected;
    t["buffered"] = run.result.buffered;
    t["diverged"] = run.result.diverged;
    j["trials"].push_back(t);
  }

  ordered_json s = ordered_json::object();
  for (const auto& name : order) s[name] = aggregate_json(finals[name]);
  j["summary"] = s;
  return j.dump(2) + "\n";
}

int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const auto runs = run_seeds(cfg, cfg.seeds.run);
  std::filesystem::create_directories(out_dir);
  for (const auto& r : runs) {
    write_file(out_dir / ("trial_" + std::to_string(r.seed) + ".csv"), trial_csv(cfg, r));
  }
  write_file(out_dir / "summary.json", summary_json(cfg, runs));
  return 0;
}

int sweep(const ExperimentConfig& cfg, std::string_view axis, const std::vector<double>& values,
          const std::filesystem::path& out_dir) {
  if (values.empty()) throw ConfigError("sweep: the values list is empty");
  if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end()) {
    ExperimentConfig probe = cfg;
    apply_axis(probe, axis, values.front());  // throws with the list of known axes
  }
  std::vector<ExperimentConfig> points;
  for (double v : values) {
    ExperimentConfig c = cfg;
    apply_axis(c, axis, v);
    points.push_back(std::move(c));
  }

  // Flatten (value, seed) so every trial can run concurrently.
  const std::size_t per_point = cfg.seeds.run.size();
  std::vector<SeedRun> results(points.size() * per_point);
  parallel_for(results.size(), [&](std::size_t k) {
    const ExperimentConfig& c = points[k / per_point];
    results[k] = run_one(c, c.seeds.run[k % per_point]);
  });

  std::filesystem::create_directories(out_dir);
  std::string combined;
  combined += "# aflsim " + std::string(version()) + " sweep axis=" + std::string(axis) + "\n";
  std::istringstream lines(format_config(cfg));
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) combined += "# " + line + "\n";
  }
  bool header_written = false;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const ExperimentConfig& c = points[p];
    const std::vector<SeedRun> runs(results.begin() + static_cast<std::ptrdiff_t>(p * per_point),
                                    results.begin() + static_cast<std::ptrdiff_t>((p + 1) * per_point));
    const auto dir = out_dir / (std::string(axis) + "_" + value_label(values[p]));
    std::filesystem::create_directories(dir);
    for (const auto& r : runs) {
      const std::string csv = trial_csv(c, r);
      write_file(dir / ("trial_" + std::to_string(r.seed) + ".csv"), csv);
      // Reuse the per-trial rows; prefix each with the sweep keys.
      std::istringstream rows(csv);
      for (std::string row; std::getline(rows, row);) {
        if (row.empty() || row.front() == '#') continue;
        if (row.rfind("iteration,", 0) == 0) {
          if (!header_written) {
            combined += std::string(axis) + ",seed," + row + "\n";
            header_written = true;
          }
          continue;
        }
        combined += value_label(values[p]) + "," + std::to_string(r.seed) + "," + row + "\n";
      }
    }
    write_file(dir / "summary.json", summary_json(c, runs));
  }
  write_file(out_dir / "sweep.csv", combined);
  return 0;
}

int gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const std::uint64_t seed = data_seed_for(cfg, cfg.seeds.run.front());
  LoadedData loaded = load_task_data(cfg, seed);
  const Dataset& full = loaded.full;
  const auto& theta = loaded.true_model;
  const auto split = split_train_test(full, cfg.task.train_count, stream_seed(seed, 1));
  std::filesystem::create_directories(out_dir);
  save_csv(split.train, out_dir / "train.csv");
  save_csv(split.test, out_dir / "test.csv");
  if (theta) {
    std::string line;
    for (std::size_t i = 0; i < theta->dim(); ++i) {
      line += (i ? "," : "") + format_metric((*theta)[i]);
    }
    write_file(out_dir / "theta_star.csv", "# seed=" + std::to_string(seed) + "\n" + line + "\n");
  }
  return 0;
}

}  // namespace aflguard
