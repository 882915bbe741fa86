#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "specfunnel/backend.hpp"
#include "specfunnel/distribution.hpp"

namespace specfunnel {

/// Knobs of the seeded stand-in for the draft and agentic models.
struct SyntheticConfig {
  std::uint64_t seed = 7;

  /// Logits emitted per generated token.
  int vocab_k = 64;
  /// Top-k window in which generated tokens hit their target separability.
  int sep_reference_k = 64;
  /// Gap between consecutive tail logits shrinks by this factor, in (0, 1].
  double tail_decay = 0.95;
  /// Per-token raw logit scale is drawn uniformly from this range.
  double logit_scale_low = 0.5;
  double logit_scale_high = 2.0;

  double p_tool_required = 0.25;
  DiscreteDistribution depth_distribution{{1, 2, 3, 4, 5}, {0.30, 0.30, 0.20, 0.12, 0.08}};
  int depth_cap = 5;

  double draft_accuracy_toolfree = 0.85;
  double draft_accuracy_toolreq = 0.40;
  double agentic_accuracy = 0.88;
  double judge_accuracy = 0.92;

  double sep_mu_correct = 4.5;
  double sep_mu_incorrect = 2.3;
  double sep_sigma = 0.6;
  DiscreteDistribution answer_len_distribution{{1, 2, 3, 4, 5}, {0.50, 0.20, 0.15, 0.10, 0.05}};
  int num_choices = 4;

  double c_judge_s = 0.05;
  double c_speculate_s = 0.30;
  double c_llm_s = 1.0;
  CostDistribution tool_cost = CostDistribution::uniform(0.5, 2.0);

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, SyntheticConfig& c);

/// Exact funnel fractions for a workload: round(beta * n) tool-free
/// queries, of which round(alpha * n_toolfree) get a correct draft.
struct QuotaSpec {
  double beta = 0.8;
  double alpha = 0.71;
};

/// Generates queries "q000000", "q000001", ... starting at first_index.
/// With a quota the judge must be perfect (judge_accuracy == 1).
std::vector<Query> make_workload(const SyntheticConfig& config, std::size_t n,
                                 std::optional<QuotaSpec> quota = std::nullopt,
                                 std::size_t first_index = 0);

/// Builds one token's logits whose separability over the top
/// sep_reference_k values equals target_sep, clamped to the range the
/// fixed tail shape can realize.
TokenLogits synthesize_token_logits(double target_sep, int vocab_k, int reference_k,
                                    double tail_decay, double scale, double offset);

/// Smallest and largest separability synthesize_token_logits can produce.
struct SeparabilityRange {
  double low;
  double high;
};
SeparabilityRange realizable_separability(int reference_k, double tail_decay);

/// One tool step of the simulated agentic loop, fully determined by the
/// incoming state.
struct AgenticStep {
  double tool_cost_s;
  std::uint64_t observation;
  std::uint64_t next_state;
};

AgenticStep agentic_step(const SyntheticConfig& config, std::uint64_t state);

/// Fuses a tool observation into the loop state.
std::uint64_t next_agentic_state(std::uint64_t state, std::uint64_t observation) noexcept;

class SyntheticBackend final : public Backend {
 public:
  explicit SyntheticBackend(SyntheticConfig config);

  JudgeOutput judge(const Query& query) override;
  SpeculativeAnswer speculate(const Query& query) override;
  AgenticOutput agentic_run(const Query& query) override;

  const SyntheticConfig& config() const noexcept { return config_; }

 private:
  std::string answer_text(const Query& query, bool correct, Rng& rng) const;

  SyntheticConfig config_;
};

}  // namespace specfunnel
