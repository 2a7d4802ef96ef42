#include <doctest.h>

#include <string>

#include "aflguard/config.hpp"
#include "aflguard/error.hpp"

using namespace aflguard;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped synthetic config holds the defaults") {
    const auto cfg = load_config(std::string(AFLGUARD_SOURCE_DIR) + "/configs/table1_synthetic.cfg");
    CHECK(cfg.clients.num_clients == 100);
    CHECK(cfg.clients.num_malicious() == 20);
    CHECK(cfg.defense.kind == DefenseKind::aflguard);
    CHECK(cfg.defense.lambda == 1.5);
    CHECK(cfg.attack.kind == AttackKind::gradient_deviation);
    CHECK(cfg.schedule.learning_rate == 1.0 / 1600.0);
    CHECK(cfg.schedule.max_client_delay == 10);
    CHECK(cfg.schedule.server_refresh_period == 10);
    CHECK(cfg.schedule.total_iterations == 2000);
    CHECK(cfg.server.size == 100);
    CHECK(cfg.seeds.run == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(format_config(cfg) == format_config(ExperimentConfig{[&] {
            ExperimentConfig c;
            c.attack.kind = AttackKind::gradient_deviation;
            return c;
          }()}));
  }

  TEST_CASE("bd config parses") {
    const auto cfg = load_config(std::string(AFLGUARD_SOURCE_DIR) + "/configs/bd_classification.cfg");
    CHECK(cfg.task.source == TaskSource::synthetic_classification);
    CHECK(cfg.attack.kind == AttackKind::backdoor);
  }

  TEST_CASE("invalid malicious fraction") {
    const auto msg = error_of("[clients]\nreal malicious_fraction = 1.0\n");
    CHECK(msg.find("malicious_fraction") != std::string::npos);
  }

  TEST_CASE("unknown key and section are named") {
    CHECK(error_of("[defense]\nreal lamda = 1\n").find("lamda") != std::string::npos);
    CHECK(error_of("[nope]\n").find("nope") != std::string::npos);
    CHECK(error_of("int x = 1\n").find("t.cfg:1") != std::string::npos);
  }

  TEST_CASE("type mismatch and duplicates") {
    CHECK(error_of("[defense]\nint lambda = 1\n").find("lambda") != std::string::npos);
    CHECK(error_of("[schedule]\nint batch_size = 1.5\n") != "");
    const auto dup = error_of("[defense]\nreal lambda = 1\nreal lambda = 2\n");
    CHECK(dup.find("t.cfg:3") != std::string::npos);
    CHECK(error_of("[seeds]\nbool resample_data = maybe\n") != "");
  }

  TEST_CASE("fractions and comments") {
    const auto cfg = parse_config("# c\n[schedule]\nreal learning_rate = 1/320  # step\n");
    CHECK(cfg.schedule.learning_rate == 1.0 / 320.0);
    CHECK(error_of("[schedule]\nreal learning_rate = 1/0\n") != "");
  }

  TEST_CASE("round trip") {
    ExperimentConfig c;
    c.defense.kind = DefenseKind::kardam;
    c.task.source = TaskSource::synthetic_classification;
    c.clients.partition = PartitionMode::noniid;
    c.schedule.learning_rate = 1.0 / 3.0;
    c.seeds.run = {7, 9};
    c.knowledge = KnowledgeScope::partial;
    const auto back = parse_config(format_config(c));
    CHECK(format_config(back) == format_config(c));
    CHECK(back.schedule.learning_rate == c.schedule.learning_rate);
    CHECK(back.seeds.run == c.seeds.run);
  }

  TEST_CASE("sweep axes") {
    ExperimentConfig c;
    apply_axis(c, "lambda", 3.0);
    CHECK(c.defense.lambda == 3.0);
    apply_axis(c, "tau_max", 4);
    CHECK(c.schedule.max_client_delay == 4);
    apply_axis(c, "ds", 0.8);
    CHECK(c.server.distribution_shift == 0.8);
    apply_axis(c, "num_clients", 50);
    CHECK(c.clients.num_malicious() == 10);
    CHECK_THROWS_AS(apply_axis(c, "tau_s", 2.5), ConfigError);
    try {
      apply_axis(c, "bogus", 1);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("malicious_fraction") != std::string::npos);
    }
    CHECK(sweep_axes().size() == 7);
  }
}
