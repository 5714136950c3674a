#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "hetflow/designs.hpp"
#include "hetflow/perfmodel.hpp"
#include "hetflow/protocol.hpp"
#include "hetflow/rng.hpp"
#include "hetflow/workload.hpp"

using namespace hetflow;

namespace {

Workload sample_workload(std::size_t count) {
  WorkloadSpec spec;
  spec.count = count;
  spec.mean_mb = 1304.85;
  spec.std_mb = 512.68;
  spec.min_mb = 50.0;
  spec.max_mb = 2770.0;
  spec.seed = 1;
  return generate_workload(spec);
}

void BM_FitLinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<SizeDurationPair> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(50.0, 2770.0);
    pts.emplace_back(x, 0.0274 * x + 49.03 + rng.gaussian(0.0, 3.89));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_linear(pts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FitLinear)->Arg(100)->Arg(1000)->Arg(10000);

void BM_PartitionBalanced(benchmark::State& state) {
  Workload wl = sample_workload(static_cast<std::size_t>(state.range(0)));
  ExecTimeModel model = default_registry().at(DesignId::D2A, TaskKind::Tiling);
  for (auto _ : state)
    benchmark::DoNotOptimize(partition_balanced(wl, 4, model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PartitionBalanced)->Arg(200)->Arg(3097);

void BM_QueuePushPull(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    protocol::Queue q("bench");
    q.register_sender("s");
    for (std::size_t i = 0; i < n; ++i)
      q.push("s", "img-" + std::to_string(i));
    q.close_sender("s");
    std::size_t drained = 0;
    while (q.pull("r").is_data())
      ++drained;
    benchmark::DoNotOptimize(drained);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QueuePushPull)->Arg(1000)->Arg(10000);

void BM_SimulatedRun(benchmark::State& state) {
  Workload wl = sample_workload(static_cast<std::size_t>(state.range(0)));
  ClusterSpec cluster = reference_cluster();
  ModelRegistry models = default_registry();
  DesignConfig cfg;
  cfg.design = static_cast<DesignId>(state.range(1));
  cfg.caps = reference_caps();
  cfg.seed = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(run_design(cluster, wl, models, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatedRun)
    ->ArgsProduct({{200, 3097}, {0, 1, 2}})
    ->ArgNames({"images", "design"});

} // namespace

BENCHMARK_MAIN();
