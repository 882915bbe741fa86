// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/sep_gate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "specfunnel/error.hpp"

namespace specfunnel {

namespace {

void check_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError(fmt::format("logit[{}] is not finite", i));
    }
  }
}

long double mean_of(std::span<const double> xs) {
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  return sum / static_cast<long double>(xs.size());
}

}  // namespace

TokenLogits TokenLogits::from_sorted(std::vector<double> values) {
  if (values.empty()) throw ValidationError("token logits must be non-empty");
  check_finite(values);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (values[i] < values[i + 1]) {
      throw ValidationError(fmt::format("token logits not sorted descending at index {}", i));
    }
  }
  return TokenLogits(std::move(values));
}

TokenLogits TokenLogits::from_unsorted(std::vector<double> values) {
  if (values.empty()) throw ValidationError("token logits must be non-empty");
  check_finite(values);
  std::sort(values.begin(), values.end(), std::greater<>());
  return TokenLogits(std::move(values));
}

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::LogConf: return "log";
    case Strategy::Mean: return "mean";
    case Strategy::Min: return "min";
    case Strategy::BottomR: return "bottom";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "log" || name == "logconf") return Strategy::LogConf;
  if (name == "mean") return Strategy::Mean;
  if (name == "min") return Strategy::Min;
  if (name == "bottom" || name == "bottom_r") return Strategy::BottomR;
  throw ValidationError(fmt::format("unknown strategy '{}'", name));
}

std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::Accept ? "accept" : "fallback";
}

void GateConfig::validate() const {
  if (k < 2) throw ValidationError(fmt::format("gate.k must be >= 2, got {}", k));
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError(fmt::format("gate.epsilon must be > 0, got {}", epsilon));
  }
  if (!(bottom_ratio > 0.0 && bottom_ratio < 1.0)) {
    throw ValidationError(fmt::format("gate.bottom_ratio must lie in (0,1), got {}", bottom_ratio));
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ValidationError(fmt::format("gate.tau must lie in (0,1), got {}", tau));
  }
}

double token_separability(const TokenLogits& logits, int k, double epsilon) {
  if (k < 1) throw ValidationError("k must be positive");
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
  const auto all = logits.values();
  const auto n = std::min<std::size_t>(all.size(), static_cast<std::size_t>(k));
  const auto top = all.first(n);

  const double mean = static_cast<double>(mean_of(top));
  const double numerator = top.front() - mean;
  if (!(numerator > 0.0)) return 0.0;

  long double sq = 0.0L;
  for (double v : top) {
    const long double d = static_cast<long double>(v) - mean;
    sq += d * d;
  }
  const double sigma = std::sqrt(static_cast<double>(sq / static_cast<long double>(n)));
  return numerator / (sigma + epsilon);
}

double max_softmax_prob(const TokenLogits& logits) {
  const auto values = logits.values();
  if (values.empty()) throw ValidationError("token logits must be non-empty");
  const double top = values.front();
  double denom = 0.0;
  for (double v : values) denom += std::exp(v - top);
  return 1.0 / denom;
}

double log_confidence(std::span<const TokenLogits> answer) {
  if (answer.empty()) throw EmptyAnswer();
  double log_sum = 0.0;
  for (const auto& token : answer) log_sum += std::log(max_softmax_prob(token));
  return std::exp(log_sum / static_cast<double>(answer.size()));
}

std::size_t bottom_count(std::size_t n, double bottom_ratio) {
  // r * n is computed in binary floating point; 0.7 * 10 lands just above 7.
  const double raw = std::ceil(bottom_ratio * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, n);
}

double aggregate(std::span<const double> token_scores, Strategy strategy, double bottom_ratio) {
  if (token_scores.empty()) throw EmptyAnswer();
  switch (strategy) {
    case Strategy::Mean:
      return static_cast<double>(mean_of(token_scores));
    case Strategy::Min:
      return *std::min_element(token_scores.begin(), token_scores.end());
    case Strategy::BottomR: {
      if (!(bottom_ratio > 0.0 && bottom_ratio < 1.0)) {
        throw ValidationError(fmt::format("bottom_ratio must lie in (0,1), got {}", bottom_ratio));
      }
      const std::size_t n = token_scores.size();
      const std::size_t m = bottom_count(n, bottom_ratio);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      // stable: equal scores keep earlier tokens first
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return token_scores[a] < token_scores[b];
      });
      long double sum = 0.0L;
      for (std::size_t i = 0; i < m; ++i) sum += token_scores[order[i]];
      const double bottom = static_cast<double>(sum / static_cast<long double>(m));
      // Rounding may not leave the exact interval [min, mean].
      const double lo = token_scores[order.front()];
      const double hi = static_cast<double>(mean_of(token_scores));
      return std::clamp(bottom, lo, std::max(lo, hi));
    }
    case Strategy::LogConf:
      break;
  }
  throw ValidationError("aggregate() does not apply to the LogConf strategy");
}

double normalize(double raw_score) noexcept {
  if (raw_score >= 0.0) return 1.0 / (1.0 + std::exp(-raw_score));
  const double e = std::exp(raw_score);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError(fmt::format("logit() needs p in (0,1), got {}", p));
  return std::log(p / (1.0 - p));
}

GateDecision gate(std::span<const TokenLogits> answer, const GateConfig& config) {
  config.validate();
  GateDecision decision;
  if (answer.empty()) {
    decision.empty_answer = true;
    return decision;
  }
  decision.token_scores.reserve(answer.size());
  for (const auto& token : answer) {
    if (token.size() < static_cast<std::size_t>(config.k)) decision.k_clamped = true;
    decision.token_scores.push_back(token_separability(token, config.k, config.epsilon));
  }
  if (config.strategy == Strategy::LogConf) {
    decision.score = log_confidence(answer);
  } else {
    decision.score = normalize(aggregate(decision.token_scores, config.strategy, config.bottom_ratio));
  }
  decision.verdict = decision.score >= config.tau ? Verdict::Accept : Verdict::Fallback;
  return decision;
}

}  // namespace specfunnel
