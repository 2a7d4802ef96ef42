#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <limits>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "aflguard/config.hpp"
#include "aflguard/error.hpp"
#include "aflguard/harness.hpp"

using namespace aflguard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("aflguard_harness_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small() {
  ExperimentConfig c;
  c.task.num_samples = 2000;
  c.task.train_count = 1600;
  c.task.dim = 20;
  c.clients.num_clients = 20;
  c.schedule.total_iterations = 200;
  c.seeds.run = {1, 2};
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("run is byte reproducible") {
    TempDir a, b;
    auto cfg = small();
    cfg.attack.kind = AttackKind::label_flip;
    run(cfg, a.path);
    run(cfg, b.path);
    for (const char* f : {"trial_1.csv", "trial_2.csv", "summary.json"}) {
      REQUIRE(fs::exists(a.path / f));
      CHECK(slurp(a.path / f) == slurp(b.path / f));
    }
    const auto j = nlohmann::json::parse(slurp(a.path / "summary.json"));
    CHECK(j["summary"].contains("mse"));
    CHECK(j["summary"].contains("mee"));
    CHECK(j["trials"].size() == 2);
  }

  TEST_CASE("trial csv layout") {
    const auto cfg = small();
    const auto runs = run_seeds(cfg, {5});
    const auto csv = trial_csv(cfg, runs[0]);
    std::istringstream in(csv);
    std::string line, header;
    std::size_t comments = 0, rows = 0;
    while (std::getline(in, line)) {
      if (line.rfind('#', 0) == 0) {
        ++comments;
      } else if (header.empty()) {
        header = line;
      } else {
        ++rows;
      }
    }
    CHECK(comments > 10);
    CHECK(header == "iteration,mse,mee,accepted,rejected,buffered");
    CHECK(rows == 5);
    CHECK(csv.find("# aflsim ") != std::string::npos);
  }

  TEST_CASE("divergent summary") {
    auto cfg = small();
    cfg.attack.kind = AttackKind::gradient_deviation;
    cfg.defense.kind = DefenseKind::asyncsgd;
    cfg.schedule.total_iterations = 2000;
    const auto j = nlohmann::json::parse(summary_json(cfg, run_seeds(cfg, cfg.seeds.run)));
    CHECK(j["summary"]["mse"]["mean"] == ">1000");
  }

  TEST_CASE("sweep") {
    TempDir d;
    auto cfg = small();
    cfg.seeds.run = {1};
    sweep(cfg, "lambda", {0.5, 1.5, 3}, d.path);
    std::size_t subdirs = 0;
    for (const auto& e : fs::directory_iterator(d.path)) subdirs += e.is_directory();
    CHECK(subdirs == 3);
    const auto combined = slurp(d.path / "sweep.csv");
    CHECK(combined.find("lambda,seed,iteration") != std::string::npos);
    CHECK_THROWS_AS(sweep(cfg, "lambda", {}, d.path), ConfigError);
    CHECK_THROWS_AS(sweep(cfg, "bogus", {1.0}, d.path), ConfigError);
  }

  TEST_CASE("gen-data") {
    TempDir d;
    const auto cfg = small();
    gen_data(cfg, d.path);
    for (const char* f : {"train.csv", "test.csv", "theta_star.csv"}) CHECK(fs::exists(d.path / f));
    std::ifstream in(d.path / "train.csv");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) n += !line.empty() && line[0] != '#';
    CHECK(n >= 1600);
  }

  TEST_CASE("format_metric") {
    CHECK(format_metric(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_metric(0.5) == "0.5");
  }
}
