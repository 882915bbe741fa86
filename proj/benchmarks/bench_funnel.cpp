// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "specfunnel/funnel.hpp"
#include "specfunnel/synthetic_backend.hpp"

using namespace specfunnel;

namespace {

void bm_serve_batch(benchmark::State& state) {
  SyntheticConfig c;
  SyntheticBackend backend(c);
  const auto queries = make_workload(c, static_cast<std::size_t>(state.range(0)));
  ScheduleConfig s;
  s.frontend_workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(serve_batch(queries, GateConfig{}, s, backend));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_serve_batch)->Args({64, 8})->Args({1024, 8})->Args({1024, 1024})->Unit(benchmark::kMillisecond);

void bm_list_schedule(benchmark::State& state) {
  std::vector<double> jobs(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i] = 1.0 + static_cast<double>(i % 17);
  for (auto _ : state) benchmark::DoNotOptimize(list_schedule_makespan(jobs, 8));
}
BENCHMARK(bm_list_schedule)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
