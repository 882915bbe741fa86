#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file pipeline.hpp
 * @brief Per-query four-phase routing with latency accounting.
 *
 *   I   judge      large model decides whether tools are needed (g)
 *   II  speculate  small model answers tool-free, with token logits
 *   III gate       answer separability decides accept / fallback
 *   IV  agentic    full stateful tool loop for everything not accepted
 *
 * The phase functions are exposed individually so the batch funnel can
 * run them stage by stage and still produce outcomes identical to
 * process_query().
 */

#include <optional>
#include <string>
#include <string_view>

#include "specfunnel/backend.hpp"
#include "specfunnel/sep_gate.hpp"

namespace specfunnel {

enum class Path {
  JudgedToolRequired,   ///< g = 1 (or judge failed): straight to the agentic loop
  SpeculationAccepted,  ///< gate accepted the draft answer
  SpeculationRejected,  ///< gate rejected (or speculation failed): agentic loop
  AgenticOnly,          ///< bypass disabled: agentic loop only, no judge
};

std::string_view to_string(Path p) noexcept;
Path parse_path(std::string_view s);

struct LatencyBreakdown {
  double judge_s = 0.0;
  double speculate_s = 0.0;
  double agentic_s = 0.0;
  friend bool operator==(const LatencyBreakdown&, const LatencyBreakdown&) = default;
};

struct QueryOutcome {
  std::string query_id;
  std::string answer;
  Path path = Path::JudgedToolRequired;
  /// Present only when a speculative answer was scored.
  std::optional<GateDecision> gate;
  LatencyBreakdown latency;
  double total_latency_s = 0.0;
  std::optional<bool> correct;
  /// Agentic tool steps taken, when the fallback ran.
  std::optional<int> agentic_depth;
  bool truncated = false;
  /// The agentic fallback failed; no answer was produced.
  bool failed = false;
  /// Backend diagnostics collected along the way ("" when none).
  std::string diagnostic;

  friend bool operator==(const QueryOutcome&, const QueryOutcome&) = default;
};

/// Case/whitespace-insensitive match. A single-letter truth ("B", "(B)",
/// "B.") compares against the first choice token of the answer.
bool answers_match(std::string_view answer, std::string_view truth);

namespace phase {

/// Phase I. Returns true when the query proceeds to speculation (g = 0).
/// A judge failure routes to the fallback.
bool judge(const Query& query, Backend& backend, QueryOutcome& outcome);

/// Phases II and III. Returns true when the gate accepts (outcome final
/// apart from finish()). A speculation failure routes to the fallback.
bool speculate_and_gate(const Query& query, const GateConfig& config, Backend& backend,
                        QueryOutcome& outcome);

/// Phase IV.
void fallback(const Query& query, Backend& backend, QueryOutcome& outcome);

/// Sums latencies and scores correctness against the ground truth.
void finish(const Query& query, QueryOutcome& outcome);

}  // namespace phase

/// Runs Phases I-IV for one query.
QueryOutcome process_query(const Query& query, const GateConfig& config, Backend& backend);

/// The baseline: the agentic loop alone, no judge and no speculation.
QueryOutcome process_query_agentic_only(const Query& query, Backend& backend);

/// Expected per-query latency c_J + beta * c_S + (1 - beta * alpha) * L_agent.
/// Throws ValidationError for rates outside [0,1] or negative costs.
double expected_latency(double beta, double alpha, double c_judge, double c_speculate,
                        double agentic_mean);

}  // namespace specfunnel
