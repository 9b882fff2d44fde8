// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "tiersim/engine.hpp"
#include "tiersim/workload.hpp"

namespace {

using namespace tiersim;

std::vector<RequestSpec> bench_workload(std::int64_t count, double hit) {
  WorkloadSpec spec;
  spec.profile = builtin_profile("loogle");
  spec.count = count;
  spec.qps = 10.0;
  spec.hit_ratio_source = HitRatioSource::fixed(hit);
  spec.seed = 12345;
  return generate_workload(spec);
}

void BM_RunSimulation(benchmark::State& state) {
  ClusterConfig cfg;
  cfg.control_mode =
      state.range(1) == 0 ? ControlMode::Coupled : ControlMode::Decoupled;
  const auto models = cost_models_from_config(cfg);
  const auto requests = bench_workload(state.range(0), 1.0);

  RunOptions options;
  options.record_trace = false;
  std::size_t events = 0;
  for (auto _ : state) {
    const auto report =
        run_simulation(requests, cfg, PolicyKind::SjfCost, models, 7, options);
    benchmark::DoNotOptimize(report.mean_ttft);
    events += 2 * requests.size();  // arrivals + completions, lower bound
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_RunSimulation)
    ->ArgsProduct({{120, 480}, {0, 1}})
    ->ArgNames({"requests", "decoupled"})
    ->Unit(benchmark::kMillisecond);

void BM_RunSimulationWithTrace(benchmark::State& state) {
  ClusterConfig cfg;
  const auto models = cost_models_from_config(cfg);
  const auto requests = bench_workload(state.range(0), 1.0);
  for (auto _ : state) {
    const auto report = run_simulation(requests, cfg, PolicyKind::SjfCost, models, 7);
    benchmark::DoNotOptimize(report.trace.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_RunSimulationWithTrace)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_DeriveBlockPlan(benchmark::State& state) {
  ClusterConfig cfg;
  RequestSpec spec;
  spec.id = 1;
  spec.context_tokens = state.range(0);
  spec.query_tokens = 32;
  for (auto _ : state) {
    benchmark::DoNotOptimize(derive_block_plan(spec, cfg));
  }
}
BENCHMARK(BM_DeriveBlockPlan)->Arg(28100)->Arg(131072);

void BM_WindowedPeakThroughput(benchmark::State& state) {
  std::vector<std::pair<double, double>> completions;
  double t = 0.0;
  for (int i = 0; i < state.range(0); ++i) {
    t += 0.01;
    completions.emplace_back(t, 1024.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(windowed_peak_throughput(completions, 0.0, t, 20.0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_WindowedPeakThroughput)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
