#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file sep_gate.hpp
 * @brief Answer-separability confidence and the accept/fallback gate.
 *
 * Token level: the leading logit standardized against the mean and
 * population standard deviation of the top-K logits,
 *
 *     sep = (l[1] - mean_K) / (std_K + eps)
 *
 * Answer level: per-token scores are reduced by Mean, Min or BottomR
 * (mean of the ceil(r * N) smallest), then squashed with the logistic
 * sigmoid and compared against tau. The LogConf mode is the
 * probability baseline: geometric mean of per-token max-softmax.
 *
 * Every function here is pure; identical inputs give bitwise-identical
 * outputs.
 */

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace specfunnel {

/// Top logits for one generated token, sorted descending, all finite.
class TokenLogits {
 public:
  TokenLogits() = default;

  /// Validates order and finiteness. Throws ValidationError.
  static TokenLogits from_sorted(std::vector<double> values);

  /// Sorts descending first. Throws ValidationError on empty/non-finite input.
  static TokenLogits from_unsorted(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double top() const noexcept { return values_.front(); }

  friend bool operator==(const TokenLogits&, const TokenLogits&) = default;

 private:
  explicit TokenLogits(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// Answer-level scoring strategy. LogConf bypasses separability entirely.
enum class Strategy { LogConf, Mean, Min, BottomR };

std::string_view to_string(Strategy s) noexcept;
/// Accepts "log", "logconf", "mean", "min", "bottom", "bottom_r". Throws ValidationError.
Strategy parse_strategy(std::string_view name);

struct GateConfig {
  int k = 64;
  double epsilon = 1e-6;
  Strategy strategy = Strategy::Min;
  double bottom_ratio = 0.2;
  double tau = 0.94;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

enum class Verdict { Accept, Fallback };

std::string_view to_string(Verdict v) noexcept;

struct GateDecision {
  Verdict verdict = Verdict::Fallback;
  /// Normalized answer confidence in (0,1); 0 for an empty answer.
  double score = 0.0;
  /// Raw per-token separability, one entry per generated token.
  std::vector<double> token_scores;
  /// Some token carried fewer than k logits; k was clamped for it.
  bool k_clamped = false;
  bool empty_answer = false;

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

/// Standardized top-logit margin over the top-k slice. If the slice holds
/// fewer than k values, k is clamped to the available count. Returns 0
/// when all considered logits are equal.
double token_separability(const TokenLogits& logits, int k, double epsilon);

/// exp(l[1]) / sum_i exp(l[i]) over the retained slice.
double max_softmax_prob(const TokenLogits& logits);

/// Geometric mean of per-token max-softmax probabilities. Throws EmptyAnswer.
double log_confidence(std::span<const TokenLogits> answer);

/// Reduces per-token scores to one answer score. Throws EmptyAnswer on an
/// empty list and ValidationError for Strategy::LogConf or a bad ratio.
double aggregate(std::span<const double> token_scores, Strategy strategy, double bottom_ratio);

/// Number of tokens BottomR averages over: ceil(r * n), within [1, n].
std::size_t bottom_count(std::size_t n, double bottom_ratio);

/// Logistic sigmoid, evaluated without overflow for any finite input.
double normalize(double raw_score) noexcept;

/// Inverse of normalize on (0,1).
double logit(double p);

/// Scores an answer and applies the threshold. An empty answer always
/// falls back with score 0.
GateDecision gate(std::span<const TokenLogits> answer, const GateConfig& config);

}  // namespace specfunnel
