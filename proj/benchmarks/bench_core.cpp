#include <benchmark/benchmark.h>

#include <random>

#include "insitu/blackbox/environment.hpp"
#include "insitu/optics/bench.hpp"
#include "insitu/optics/propagation.hpp"
#include "insitu/policy/gaussian_policy.hpp"
#include "insitu/rl/advantages.hpp"
#include "insitu/rl/losses.hpp"

using namespace insitu;

namespace {

optics::Shape square(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  return {n, n};
}

void BM_Propagate(benchmark::State& state) {
  const optics::Shape s = square(state);
  const optics::BenchConfig cfg;
  const optics::AngularSpectrumPropagator prop(s, cfg.pitch_um, cfg.wavelength_um, cfg.distance_mm);
  const optics::ComplexField field(s, cfg.pitch_um, cfg.wavelength_um);
  for (auto _ : state) benchmark::DoNotOptimize(prop(field));
}
BENCHMARK(BM_Propagate)->Arg(64)->Arg(128)->Arg(256);

void BM_BenchRun(benchmark::State& state) {
  optics::BenchConfig cfg;
  cfg.shape = square(state);
  cfg.diffuser = optics::DiffuserConfig{};
  const optics::Bench bench(cfg);
  const optics::PhaseMap phase(cfg.shape, 1.0);
  Rng rng = make_rng(0);
  for (auto _ : state) benchmark::DoNotOptimize(bench.run(nullptr, phase, rng));
}
BENCHMARK(BM_BenchRun)->Arg(64)->Arg(128);

void BM_Sample(benchmark::State& state) {
  const policy::GaussianPolicy p(optics::PhaseMap({64, 64}), std::log(0.15));
  Rng rng = make_rng(1);
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(policy::sample(p, m, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(32)->Arg(128);

void BM_PpoLoss(benchmark::State& state) {
  const policy::GaussianPolicy old(optics::PhaseMap({64, 64}), std::log(0.15));
  Rng rng = make_rng(2);
  const auto m = static_cast<std::size_t>(state.range(0));
  policy::SampleBatch batch = policy::sample(old, m, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> rewards(m);
  for (double& r : rewards) r = n(rng);
  rl::Rollout rollout(std::move(batch), std::move(rewards));
  rollout.normalize();
  optics::PhaseMap shifted(old.shape(), 0.01);
  const auto current = old.with_params(std::move(shifted), old.log_sigma());
  for (auto _ : state) benchmark::DoNotOptimize(rl::ppo_loss(rollout, current, old, 0.2));
}
BENCHMARK(BM_PpoLoss)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
