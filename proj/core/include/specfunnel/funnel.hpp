#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file funnel.hpp
 * @brief Batch funnel scheduler and analytic throughput models.
 *
 * A batch of B queries flows through three stages:
 *
 *   B --judge (parallel)--> beta*B tool-free + (1-beta)*B tool-required
 *   beta*B --speculate + gate (parallel)--> alpha*beta*B accepted
 *   residual set R --agentic (serial per worker)--> answers
 *
 * The scheduler only decides *when* work runs. Every answer comes from
 * the same phase functions process_query() uses, so outcomes never
 * depend on worker counts or batch composition.
 */

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "specfunnel/backend.hpp"
#include "specfunnel/pipeline.hpp"
#include "specfunnel/sep_gate.hpp"

namespace specfunnel {

enum class ClockMode { Simulated, Measured };

std::string_view to_string(ClockMode m) noexcept;
ClockMode parse_clock_mode(std::string_view s);

struct ScheduleConfig {
  /// Concurrency of the judge and speculate stages.
  int frontend_workers = 1;
  /// Concurrency of the agentic drain; 1 matches a strictly serial fallback.
  int agentic_workers = 1;
  ClockMode mode = ClockMode::Simulated;

  void validate() const;
};

struct FunnelStats {
  int batch_size = 0;
  int n_toolfree = 0;
  int n_toolreq = 0;
  int n_accepted = 0;
  int n_rejected = 0;
  int n_residual = 0;
  double beta_hat = 0.0;
  double alpha_hat = 0.0;
  double frontend_makespan_s = 0.0;
  double fallback_makespan_s = 0.0;
  double batch_makespan_s = 0.0;
  /// B / batch_makespan_s; +inf for a zero-length batch.
  double throughput_qps = 0.0;
  double baseline_makespan_s = 0.0;
  /// baseline_makespan_s / batch_makespan_s.
  double speedup = 0.0;
  int frontend_workers = 1;
  int agentic_workers = 1;
  ClockMode mode = ClockMode::Simulated;
  bool bypass = true;

  friend bool operator==(const FunnelStats&, const FunnelStats&) = default;
};

/// Throws ValidationError when a counting identity is broken.
void check_counting_identities(const FunnelStats& stats);

struct BatchResult {
  /// In batch order.
  std::vector<QueryOutcome> outcomes;
  FunnelStats stats;
};

/// Runs one batch through the funnel. Throws ValidationError on an empty batch.
BatchResult serve_batch(std::span<const Query> queries, const GateConfig& gate_config,
                        const ScheduleConfig& schedule, Backend& backend);

/// Runs one batch with the bypass disabled: agentic loop only.
BatchResult serve_batch_baseline(std::span<const Query> queries, const ScheduleConfig& schedule,
                                 Backend& backend);

/// Time to run calls in consecutive waves of `workers`; each wave lasts
/// as long as its slowest call.
double wave_makespan(std::span<const double> durations, int workers);

/// Earliest-free-worker FIFO list scheduling; ties go to the lower worker index.
double list_schedule_makespan(std::span<const double> durations, int workers);

/// 1 / (1 - beta * alpha). Throws InfiniteSpeedup when beta * alpha == 1
/// and ValidationError for rates outside [0,1].
double speedup_model(double beta, double alpha);

/// B / sum(latencies): serial agentic throughput ceiling.
double throughput_bound(std::span<const double> latencies);

}  // namespace specfunnel
