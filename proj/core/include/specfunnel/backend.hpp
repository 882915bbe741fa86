#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <optional>
#include <string>
#include <vector>

#include "specfunnel/sep_gate.hpp"

namespace specfunnel {

/// One question about one image. The latent fields exist only for
/// synthetic workloads and are never shown to a real model.
struct Query {
  std::string id;
  std::string image_ref;
  std::string question;
  std::optional<std::string> ground_truth;
  std::optional<bool> true_requires_tools;
  std::optional<int> true_depth;
  /// Forces the draft model's correctness (deterministic-quota workloads).
  std::optional<bool> draft_correct;

  void validate() const;
  friend bool operator==(const Query&, const Query&) = default;
};

struct JudgeOutput {
  /// 0: answerable from the global image; 1: tools may be needed.
  int g = 1;
  double latency_s = 0.0;
};

struct SpeculativeAnswer {
  std::string answer;
  std::vector<TokenLogits> token_logits;
  double latency_s = 0.0;

  friend bool operator==(const SpeculativeAnswer&, const SpeculativeAnswer&) = default;
};

struct StepCost {
  double llm_s = 0.0;
  double tool_s = 0.0;
  friend bool operator==(const StepCost&, const StepCost&) = default;
};

struct AgenticOutput {
  std::string answer;
  /// Tool steps actually taken (<= depth cap).
  int depth = 0;
  /// depth tool steps followed by one answer-emission step with no tool.
  std::vector<StepCost> step_costs;
  double latency_s = 0.0;
  /// The loop hit the depth cap before the query's natural depth.
  bool truncated = false;

  friend bool operator==(const AgenticOutput&, const AgenticOutput&) = default;
};

/// The two models behind the pipeline: the large agentic model (judge,
/// agentic loop) and the small tool-free draft model (speculate).
///
/// judge() and speculate() are stateless and may be called concurrently.
/// agentic_run() may run concurrently for distinct queries.
/// All three throw BackendUnavailable on transport or protocol failure.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual JudgeOutput judge(const Query& query) = 0;
  virtual SpeculativeAnswer speculate(const Query& query) = 0;
  virtual AgenticOutput agentic_run(const Query& query) = 0;
};

/// Sum of llm and tool costs over the steps.
double total_step_cost(const std::vector<StepCost>& steps) noexcept;

}  // namespace specfunnel
