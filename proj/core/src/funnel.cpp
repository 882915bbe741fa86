// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/funnel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "parallel.hpp"
#include "specfunnel/error.hpp"

namespace specfunnel {

namespace {

constexpr int kMaxThreads = 256;

int thread_count(int workers, std::size_t n, ClockMode mode) {
  int cap = kMaxThreads;
  if (mode == ClockMode::Simulated) {
    // Concurrency is modeled by the virtual clock; real threads only speed things up.
    cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  return static_cast<int>(std::min<std::size_t>({static_cast<std::size_t>(workers),
                                                  static_cast<std::size_t>(cap), std::max<std::size_t>(n, 1)}));
}

using detail::parallel_for;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void finalize_stats(FunnelStats& s) {
  s.n_residual = s.batch_size - s.n_accepted;
  s.beta_hat = static_cast<double>(s.n_toolfree) / static_cast<double>(s.batch_size);
  s.alpha_hat = static_cast<double>(s.n_accepted) / static_cast<double>(std::max(s.n_toolfree, 1));
  s.batch_makespan_s = s.frontend_makespan_s + s.fallback_makespan_s;
  s.throughput_qps = s.batch_makespan_s > 0.0 ? s.batch_size / s.batch_makespan_s
                                              : std::numeric_limits<double>::infinity();
  if (s.batch_makespan_s > 0.0) {
    s.speedup = s.baseline_makespan_s / s.batch_makespan_s;
  } else {
    s.speedup = s.baseline_makespan_s > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
}

}  // namespace

std::string_view to_string(ClockMode m) noexcept {
  return m == ClockMode::Simulated ? "simulated" : "measured";
}

ClockMode parse_clock_mode(std::string_view s) {
  if (s == "simulated") return ClockMode::Simulated;
  if (s == "measured") return ClockMode::Measured;
  throw ValidationError(fmt::format("unknown clock mode '{}'", s));
}

void ScheduleConfig::validate() const {
  if (frontend_workers < 1) throw ValidationError("schedule.frontend_workers must be >= 1");
  if (agentic_workers < 1) throw ValidationError("schedule.agentic_workers must be >= 1");
}

void check_counting_identities(const FunnelStats& s) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(fmt::format("funnel counting identity violated: {}", what));
  };
  require(s.n_toolfree + s.n_toolreq == s.batch_size, "n_toolfree + n_toolreq == B");
  require(s.n_accepted + s.n_rejected == s.n_toolfree, "n_accepted + n_rejected == n_toolfree");
  require(s.n_residual == s.n_rejected + s.n_toolreq, "n_residual == n_rejected + n_toolreq");
  require(s.n_residual == s.batch_size - s.n_accepted, "n_residual == B - n_accepted");
  require(s.beta_hat == static_cast<double>(s.n_toolfree) / s.batch_size, "beta_hat == n_toolfree / B");
  require(s.alpha_hat == static_cast<double>(s.n_accepted) / std::max(s.n_toolfree, 1),
          "alpha_hat == n_accepted / max(n_toolfree, 1)");
  if (s.batch_makespan_s > 0.0) {
    require(s.throughput_qps == s.batch_size / s.batch_makespan_s, "throughput == B / makespan");
  }
}

double wave_makespan(std::span<const double> durations, int workers) {
  if (workers < 1) throw ValidationError("workers must be >= 1");
  double total = 0.0;
  const auto w = static_cast<std::size_t>(workers);
  for (std::size_t start = 0; start < durations.size(); start += w) {
    const auto end = std::min(durations.size(), start + w);
    total += *std::max_element(durations.begin() + static_cast<std::ptrdiff_t>(start),
                               durations.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return total;
}

double list_schedule_makespan(std::span<const double> durations, int workers) {
  if (workers < 1) throw ValidationError("workers must be >= 1");
  std::vector<double> free_at(static_cast<std::size_t>(workers), 0.0);
  for (double d : durations) {
    auto earliest = std::min_element(free_at.begin(), free_at.end());
    *earliest += d;
  }
  return *std::max_element(free_at.begin(), free_at.end());
}

BatchResult serve_batch(std::span<const Query> queries, const GateConfig& gate_config,
                        const ScheduleConfig& schedule, Backend& backend) {
  if (queries.empty()) throw ValidationError("serve_batch: empty batch");
  gate_config.validate();
  schedule.validate();
  for (const auto& q : queries) q.validate();

  const std::size_t n = queries.size();
  BatchResult result;
  auto& outcomes = result.outcomes;
  outcomes.resize(n);
  for (std::size_t i = 0; i < n; ++i) outcomes[i].query_id = queries[i].id;

  const int frontend_threads = thread_count(schedule.frontend_workers, n, schedule.mode);
  const int agentic_threads = thread_count(schedule.agentic_workers, n, schedule.mode);

  // Stage 1: screen every query.
  std::vector<char> toolfree(n, 0);
  auto t0 = Clock::now();
  parallel_for(n, frontend_threads, [&](std::size_t i) {
    toolfree[i] = phase::judge(queries[i], backend, outcomes[i]) ? 1 : 0;
  });
  const double judge_wall = seconds_since(t0);

  // Stage 2: speculate and gate the tool-free subset.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (toolfree[i]) candidates.push_back(i);
  }
  std::vector<char> accepted(n, 0);
  t0 = Clock::now();
  parallel_for(candidates.size(), frontend_threads, [&](std::size_t c) {
    const auto i = candidates[c];
    accepted[i] = phase::speculate_and_gate(queries[i], gate_config, backend, outcomes[i]) ? 1 : 0;
  });
  const double speculate_wall = seconds_since(t0);

  // Stage 3: drain the residual set in batch order.
  std::vector<std::size_t> residual;
  for (std::size_t i = 0; i < n; ++i) {
    if (!accepted[i]) residual.push_back(i);
  }
  t0 = Clock::now();
  parallel_for(residual.size(), agentic_threads, [&](std::size_t r) {
    const auto i = residual[r];
    phase::fallback(queries[i], backend, outcomes[i]);
  });
  const double fallback_wall = seconds_since(t0);

  for (std::size_t i = 0; i < n; ++i) phase::finish(queries[i], outcomes[i]);

  auto& s = result.stats;
  s.batch_size = static_cast<int>(n);
  s.n_toolfree = static_cast<int>(candidates.size());
  s.n_toolreq = s.batch_size - s.n_toolfree;
  s.n_accepted = static_cast<int>(std::count(accepted.begin(), accepted.end(), 1));
  s.n_rejected = s.n_toolfree - s.n_accepted;
  s.frontend_workers = schedule.frontend_workers;
  s.agentic_workers = schedule.agentic_workers;
  s.mode = schedule.mode;
  s.bypass = true;

  if (schedule.mode == ClockMode::Simulated) {
    std::vector<double> judge_costs(n);
    for (std::size_t i = 0; i < n; ++i) judge_costs[i] = outcomes[i].latency.judge_s;
    std::vector<double> speculate_costs;
    for (auto i : candidates) speculate_costs.push_back(outcomes[i].latency.speculate_s);
    std::vector<double> fallback_costs;
    for (auto i : residual) fallback_costs.push_back(outcomes[i].latency.agentic_s);
    s.frontend_makespan_s = wave_makespan(judge_costs, schedule.frontend_workers) +
                            wave_makespan(speculate_costs, schedule.frontend_workers);
    s.fallback_makespan_s = list_schedule_makespan(fallback_costs, schedule.agentic_workers);

    // Baseline: the same batch with every query through the agentic loop.
    std::vector<double> baseline_costs(n, 0.0);
    for (auto i : residual) baseline_costs[i] = outcomes[i].latency.agentic_s;
    std::vector<std::size_t> bypassed;
    for (std::size_t i = 0; i < n; ++i) {
      if (accepted[i]) bypassed.push_back(i);
    }
    parallel_for(bypassed.size(), agentic_threads, [&](std::size_t b) {
      const auto i = bypassed[b];
      try {
        baseline_costs[i] = backend.agentic_run(queries[i]).latency_s;
      } catch (const BackendUnavailable&) {
        baseline_costs[i] = 0.0;
      }
    });
    s.baseline_makespan_s = list_schedule_makespan(baseline_costs, schedule.agentic_workers);
  } else {
    s.frontend_makespan_s = judge_wall + speculate_wall;
    s.fallback_makespan_s = fallback_wall;
    s.baseline_makespan_s = serve_batch_baseline(queries, schedule, backend).stats.batch_makespan_s;
  }
  finalize_stats(s);
  return result;
}

BatchResult serve_batch_baseline(std::span<const Query> queries, const ScheduleConfig& schedule,
                                 Backend& backend) {
  if (queries.empty()) throw ValidationError("serve_batch: empty batch");
  schedule.validate();
  for (const auto& q : queries) q.validate();

  const std::size_t n = queries.size();
  BatchResult result;
  result.outcomes.resize(n);
  const int agentic_threads = thread_count(schedule.agentic_workers, n, schedule.mode);
  const auto t0 = Clock::now();
  parallel_for(n, agentic_threads, [&](std::size_t i) {
    result.outcomes[i] = process_query_agentic_only(queries[i], backend);
  });
  const double wall = seconds_since(t0);

  auto& s = result.stats;
  s.batch_size = static_cast<int>(n);
  s.n_toolreq = s.batch_size;
  s.frontend_workers = schedule.frontend_workers;
  s.agentic_workers = schedule.agentic_workers;
  s.mode = schedule.mode;
  s.bypass = false;
  if (schedule.mode == ClockMode::Simulated) {
    std::vector<double> costs(n);
    for (std::size_t i = 0; i < n; ++i) costs[i] = result.outcomes[i].latency.agentic_s;
    s.fallback_makespan_s = list_schedule_makespan(costs, schedule.agentic_workers);
  } else {
    s.fallback_makespan_s = wall;
  }
  s.baseline_makespan_s = s.fallback_makespan_s;
  finalize_stats(s);
  return result;
}

double speedup_model(double beta, double alpha) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError(fmt::format("beta must lie in [0,1], got {}", beta));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(fmt::format("alpha must lie in [0,1], got {}", alpha));
  const double bypass = beta * alpha;
  if (bypass >= 1.0) throw InfiniteSpeedup();
  return 1.0 / (1.0 - bypass);
}

double throughput_bound(std::span<const double> latencies) {
  if (latencies.empty()) throw ValidationError("throughput_bound: empty batch");
  double total = 0.0;
  for (double l : latencies) {
    if (!(l > 0.0)) throw ValidationError("throughput_bound: latencies must be > 0");
    total += l;
  }
  return static_cast<double>(latencies.size()) / total;
}

}  // namespace specfunnel
