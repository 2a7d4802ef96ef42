#include <benchmark/benchmark.h>

#include <vector>

#include "aflguard/data.hpp"
#include "aflguard/defenses.hpp"
#include "aflguard/engine.hpp"
#include "aflguard/harness.hpp"
#include "aflguard/verification.hpp"

namespace {

using namespace aflguard;

ParamVector noise(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> n;
  ParamVector v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

void BM_AflguardAccept(benchmark::State& state) {
  Rng rng(1);
  const auto dim = static_cast<std::size_t>(state.range(0));
  const ParamVector a = noise(dim, rng), b = noise(dim, rng);
  for (auto _ : state) benchmark::DoNotOptimize(aflguard_accept(a, b, 1.5));
}
BENCHMARK(BM_AflguardAccept)->Arg(100)->Arg(720)->Arg(10000);

void BM_CoordinateMedian(benchmark::State& state) {
  Rng rng(2);
  std::vector<ParamVector> vs;
  for (int i = 0; i < state.range(0); ++i) vs.push_back(noise(100, rng));
  for (auto _ : state) benchmark::DoNotOptimize(coordinate_median(vs));
}
BENCHMARK(BM_CoordinateMedian)->Arg(10)->Arg(100);

void BM_KardamStep(benchmark::State& state) {
  Rng rng(3);
  std::vector<ParamVector> updates, bases;
  for (int i = 0; i < 256; ++i) updates.push_back(noise(100, rng)), bases.push_back(noise(100, rng));
  KardamState kardam;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kardam.step(i % 100, updates[i % 256], bases[(i * 7) % 256]));
    ++i;
  }
}
BENCHMARK(BM_KardamStep);

void BM_Trial(benchmark::State& state) {
  ExperimentConfig cfg = verify::synthetic_regression_defaults();
  cfg.defense.kind = static_cast<DefenseKind>(state.range(0));
  cfg.attack.kind = AttackKind::gradient_deviation;
  const PreparedData data = prepare_data(cfg, 1);
  const TrialConfig tc = trial_config(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(tc, data, 1));
  state.SetLabel(std::string(to_string(cfg.defense.kind)));
}
BENCHMARK(BM_Trial)
    ->Arg(static_cast<int>(DefenseKind::asyncsgd))
    ->Arg(static_cast<int>(DefenseKind::aflguard))
    ->Arg(static_cast<int>(DefenseKind::kardam))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
