// aflsim: command-line front end for the asynchronous FL simulator.

#include <charconv>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aflguard/config.hpp"
#include "aflguard/error.hpp"
#include "aflguard/harness.hpp"
#include "aflguard/verification.hpp"

namespace {

using namespace aflguard;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split(s)) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size()) {
      throw ConfigError("--seed: '" + item + "' is not a non-negative integer");
    }
    seeds.push_back(v);
  }
  return seeds;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> values;
  if (s.empty()) return values;
  for (const auto& item : split(s)) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size()) {
      throw ConfigError("--values: '" + item + "' is not a number");
    }
    values.push_back(v);
  }
  return values;
}

ExperimentConfig load(const std::string& path, const std::string& seeds) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  if (!seeds.empty()) {
    cfg.seeds.run = parse_seeds(seeds);
    cfg.validate();
  }
  return cfg;
}

int verify_all(const std::vector<std::uint64_t>& seeds, bool verbose) {
  int failures = 0;
  std::cout << "module properties\n";
  for (const auto& m : verify::modules()) {
    const auto checks = verify::module_properties(m);
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.passed;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << m << " (" << checks.size() << " checks)\n";
    for (const auto& c : checks) {
      if (verbose || !c.passed) {
        std::cout << "        " << (c.passed ? "ok   " : "FAIL ") << c.name;
        if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
        std::cout << "\n";
      }
    }
    failures += ok ? 0 : 1;
  }
  std::cout << "acceptance criteria\n";
  verify::Context ctx(seeds);
  std::vector<verify::CriterionResult> results;
  for (int id : verify::criterion_ids()) {
    results.push_back(verify::criterion(id, ctx));
    verify::report({results.back()}, std::cout, verbose);
    std::cout.flush();
  }
  for (const auto& r : results) failures += r.passed ? 0 : 1;
  std::cout << (failures == 0 ? "all checks passed\n" : std::to_string(failures) + " failing group(s)\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous federated learning poisoning simulator"};
  app.set_version_flag("--version", std::string(aflguard::version()));
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seeds, axis, values;
  bool verbose = false;

  auto* gen = app.add_subcommand("gen-data", "Write the train/test split of the configured task as CSV");
  gen->add_option("--config", config_path, "Experiment config file");
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--seed", seeds, "Run seed whose dataset is written");

  auto* run = app.add_subcommand("run", "Run one trial per seed and write CSV + summary.json");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seeds, "Comma-separated run seeds (overrides the config)");

  auto* sw = app.add_subcommand("sweep", "Run the config once per value of one parameter");
  sw->add_option("--config", config_path, "Experiment config file")->required();
  sw->add_option("--out", out_dir, "Output directory");
  sw->add_option("--seed", seeds, "Comma-separated run seeds (overrides the config)");
  sw->add_option("--axis", axis, "malicious_fraction|lambda|tau_max|tau_s|trusted_size|ds|num_clients")
      ->required();
  sw->add_option("--values", values, "Comma-separated axis values")->required();

  auto* ver = app.add_subcommand("verify", "Run the property suites and acceptance criteria");
  ver->add_option("--seed", seeds, "Comma-separated seeds for the acceptance runs (default 1,2,3)");
  ver->add_flag("-v,--verbose", verbose, "Print every check, not only failures");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return aflguard::gen_data(load(config_path, seeds), out_dir);
    if (*run) {
      const int rc = aflguard::run(load(config_path, seeds), out_dir);
      std::cout << "wrote " << out_dir << "/summary.json\n";
      return rc;
    }
    if (*sw) {
      const int rc = aflguard::sweep(load(config_path, seeds), axis, parse_values(values), out_dir);
      std::cout << "wrote " << out_dir << "/sweep.csv\n";
      return rc;
    }
    if (*ver) return verify_all(seeds.empty() ? std::vector<std::uint64_t>{1, 2, 3} : parse_seeds(seeds), verbose);
  } catch (const aflguard::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
