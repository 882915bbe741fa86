// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "specfunnel/sep_gate.hpp"

using namespace specfunnel;

namespace {

// n tokens, each with `width` sorted logits.
std::vector<TokenLogits> make_answer(int n, int width) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<TokenLogits> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(static_cast<std::size_t>(width));
    for (auto& x : v) x = d(rng);
    std::sort(v.begin(), v.end(), std::greater<>());
    out.push_back(TokenLogits::from_sorted(std::move(v)));
  }
  return out;
}

void bm_token_separability(benchmark::State& state) {
  const auto answer = make_answer(1, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(token_separability(answer[0], 64, 1e-6));
}
BENCHMARK(bm_token_separability)->Arg(16)->Arg(64)->Arg(256);

void bm_gate(benchmark::State& state) {
  const auto answer = make_answer(static_cast<int>(state.range(0)), 64);
  GateConfig c;
  c.strategy = static_cast<Strategy>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(gate(answer, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_gate)->ArgsProduct({{1, 8, 64}, {static_cast<long>(Strategy::Min), static_cast<long>(Strategy::Mean),
                                              static_cast<long>(Strategy::BottomR), static_cast<long>(Strategy::LogConf)}});

}  // namespace

BENCHMARK_MAIN();
