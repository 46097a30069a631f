#include <benchmark/benchmark.h>

#include "qbai/bench.hpp"
#include "qbai/channel.hpp"
#include "qbai/engine.hpp"
#include "qbai/gaps.hpp"
#include "qbai/quantest.hpp"

using namespace qbai;
using dist::RewardDistribution;

namespace {

void BM_ChannelQuery(benchmark::State& state) {
  const dist::Instance inst({RewardDistribution::dirac_uniform_mixture(1.0 / 3.0)}, 0.5, 1.0);
  channel::Channel ch(inst, 1);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ch.query({0, t, 0}).bit);
    t = t < 0.9 ? t + 0.1 : 0.0;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ChannelQuery);

// Arg: grid step denominator.
void BM_QuantEst(benchmark::State& state) {
  const dist::Instance inst({RewardDistribution::dirac_uniform_mixture(1.0 / 3.0)}, 0.5, 1.0);
  const auto x = bench::unit_grid(1.0 / static_cast<double>(state.range(0)));
  quantest::MnbsParams p;
  p.delta_relax = 0.05;
  std::uint64_t seed = 0;
  std::uint64_t queries = 0;
  for (auto _ : state) {
    channel::Channel ch(inst, seed++);
    benchmark::DoNotOptimize(quantest::quant_est(ch, 0, x, p));
    queries += ch.ledger().total_pulls + ch.ledger().sentinel_queries;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(queries));
}
BENCHMARK(BM_QuantEst)->Arg(20)->Arg(100)->Arg(1000);

void BM_QuantEstNaive(benchmark::State& state) {
  const dist::Instance inst({RewardDistribution::dirac_uniform_mixture(1.0 / 3.0)}, 0.5, 1.0);
  const auto x = bench::unit_grid(1.0 / static_cast<double>(state.range(0)));
  quantest::MnbsParams p;
  p.delta_relax = 0.05;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    channel::Channel ch(inst, seed++);
    benchmark::DoNotOptimize(quantest::quant_est_naive(ch, 0, x, p));
  }
}
BENCHMARK(BM_QuantEstNaive)->Arg(20)->Arg(100)->Arg(1000);

// Arg: number of arms.
void BM_GapReport(benchmark::State& state) {
  const auto inst = dist::make_lower_bound_instance(static_cast<std::size_t>(state.range(0)), 0.1, std::nullopt);
  const auto cfg = gaps::GapConfig::for_instance(inst, bench::separation_eps(inst, 0.5), 2);
  for (auto _ : state) benchmark::DoNotOptimize(gaps::gap_report(inst, cfg));
}
BENCHMARK(BM_GapReport)->Arg(3)->Arg(10);

void BM_EngineRun(benchmark::State& state) {
  const auto inst = dist::make_lower_bound_instance(3, 1.0 / 6.0, std::nullopt);
  engine::AlgoConfig cfg;
  cfg.eps = bench::separation_eps(inst, 0.25);
  cfg.c = 2;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    channel::Channel ch(inst, seed++);
    benchmark::DoNotOptimize(engine::run(ch, cfg));
  }
}
BENCHMARK(BM_EngineRun)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
