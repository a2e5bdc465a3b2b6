#include <benchmark/benchmark.h>

#include "uulab/harness.hpp"

using namespace uulab;

namespace {

EnvSpec bench_env(std::size_t S) {
  Rng rng = make_stream(11, kGeneratorStream);
  return generate_dense_env(S, 8, 20, 10000, 0.1, rng);
}

void BM_OptimalSerial(benchmark::State& st) {
  const EnvSpec env = bench_env(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::optimal_values(env));
}

void BM_OptimalParallel(benchmark::State& st) {
  const EnvSpec env = bench_env(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(optimal_values(env));
}

void BM_Update(benchmark::State& st) {
  const EnvSpec env = bench_env(static_cast<std::size_t>(st.range(0)));
  auto params = LearnerParams::from_env(env, Mode::growing_awareness);
  Learner learner(params, env.initial_aware);
  Rng rng = make_stream(3, kRolloutStream);
  std::size_t t = 0;
  for (auto _ : st) {
    st.PauseTiming();
    if (t == params.episodes) {
      learner = Learner(params, env.initial_aware);
      t = 0;
    }
    const auto trace = rollout_episode(env, [&](std::size_t h, std::size_t s) {
      return learner.select_action(h, s);
    }, rng);
    st.ResumeTiming();
    learner.update_after_episode(trace, ++t);
  }
}

void sweep_bench(benchmark::State& st, bool parallel) {
  SweepConfig cfg;
  cfg.generator.num_states = 8;
  cfg.generator.episodes = 200;
  for (std::uint64_t s = 1; s <= 8; ++s) cfg.seeds.push_back(s);
  cfg.threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(parallel ? run_sweep(cfg) : run_sweep_serial(cfg));
}

void BM_SweepSerial(benchmark::State& st) { sweep_bench(st, false); }
void BM_SweepParallel(benchmark::State& st) { sweep_bench(st, true); }

}  // namespace

BENCHMARK(BM_OptimalSerial)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_OptimalParallel)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Update)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SweepSerial)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
