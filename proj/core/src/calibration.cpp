// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "parallel.hpp"
#include "specfunnel/error.hpp"
#include "specfunnel/funnel.hpp"
#include "specfunnel/pipeline.hpp"

namespace specfunnel {

namespace {

double sample_sd(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / (n - 1.0));
}

// Linear-interpolation quantile on sorted data.
double quantile(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void require_spread(std::span<const double> scores) {
  if (scores.size() < 2) {
    throw DegenerateDistribution(fmt::format("need >= 2 scores, got {}", scores.size()),
                                 scores.empty() ? 0.0 : scores.front());
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) throw DegenerateDistribution("scores have zero variance", *lo);
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

double ScoreCollection::beta_hat() const noexcept {
  const auto total = samples.size() + excluded;
  return total == 0 ? 0.0 : static_cast<double>(samples.size()) / static_cast<double>(total);
}

ScoreCollection collect_scores(std::span<const Query> queries, const GateConfig& config,
                               Backend& backend, int workers) {
  config.validate();
  for (const auto& q : queries) {
    q.validate();
    if (!q.ground_truth) throw ValidationError(fmt::format("query {}: missing ground truth", q.id));
  }

  struct Slot {
    bool kept = false;
    bool judged = false;
    double judge_s = 0.0;
    double speculate_s = 0.0;
    ScoreSample sample;
    std::vector<double> tokens;
  };
  std::vector<Slot> slots(queries.size());
  detail::parallel_for(queries.size(), std::max(workers, 1), [&](std::size_t i) {
    const auto& q = queries[i];
    try {
      auto& slot = slots[i];
      const auto verdict = backend.judge(q);
      slot.judged = true;
      slot.judge_s = verdict.latency_s;
      if (verdict.g != 0) return;
      const auto draft = backend.speculate(q);
      auto decision = gate(draft.token_logits, config);
      if (decision.empty_answer) return;
      slot.kept = true;
      slot.speculate_s = draft.latency_s;
      slot.sample = ScoreSample{q.id, decision.score, answers_match(draft.answer, *q.ground_truth),
                                config.strategy};
      slot.tokens = std::move(decision.token_scores);
    } catch (const BackendUnavailable&) {
      // counted as excluded
    }
  });

  ScoreCollection out;
  std::size_t judged = 0;
  for (auto& slot : slots) {
    if (slot.judged) {
      ++judged;
      out.mean_judge_s += slot.judge_s;
    }
    if (!slot.kept) {
      ++out.excluded;
      continue;
    }
    out.mean_speculate_s += slot.speculate_s;
    out.samples.push_back(std::move(slot.sample));
    out.token_scores.push_back(std::move(slot.tokens));
  }
  if (judged) out.mean_judge_s /= static_cast<double>(judged);
  if (!out.samples.empty()) out.mean_speculate_s /= static_cast<double>(out.samples.size());
  return out;
}

double KdeCurve::mode() const {
  const auto it = std::max_element(density.begin(), density.end());
  return grid[static_cast<std::size_t>(it - density.begin())];
}

double silverman_bandwidth(std::span<const double> scores) {
  require_spread(scores);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = sample_sd(sorted);
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

KdeCurve kde(std::span<const double> scores, std::optional<double> bandwidth) {
  require_spread(scores);
  KdeCurve curve;
  // A rule-of-thumb bandwidth below the grid spacing would leave the
  // density unresolved between grid points; floor it there.
  constexpr double spacing = 1.0 / static_cast<double>(kKdeGridSize - 1);
  curve.bandwidth = bandwidth ? *bandwidth : std::max(silverman_bandwidth(scores), spacing);
  if (!(curve.bandwidth > 0.0)) throw ValidationError("kde bandwidth must be > 0");

  const double h = curve.bandwidth;
  const double norm = 1.0 / (static_cast<double>(scores.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  auto kernel = [h](double u) { return std::exp(-0.5 * (u / h) * (u / h)); };

  curve.grid.resize(kKdeGridSize);
  curve.density.resize(kKdeGridSize);
  for (std::size_t g = 0; g < kKdeGridSize; ++g) {
    const double x = static_cast<double>(g) / static_cast<double>(kKdeGridSize - 1);
    double sum = 0.0;
    for (double s : scores) {
      // reflect about 0 and 1 so mass stays on [0,1]
      sum += kernel(x - s) + kernel(x + s) + kernel(x - (2.0 - s));
    }
    curve.grid[g] = x;
    curve.density[g] = sum * norm;
  }
  return curve;
}

double peak_distance(std::span<const double> correct_scores, std::span<const double> incorrect_scores) {
  return std::abs(kde(correct_scores).mode() - kde(incorrect_scores).mode());
}

double mean_distance(std::span<const double> correct_scores, std::span<const double> incorrect_scores) {
  if (correct_scores.empty() || incorrect_scores.empty()) {
    throw DegenerateDistribution("mean distance needs both classes", 0.0);
  }
  return std::abs(mean_of(correct_scores) - mean_of(incorrect_scores));
}

std::vector<OperatingPoint> sweep_threshold(std::span<const ScoreSample> samples,
                                            std::span<const double> taus, const CostModel& costs,
                                            double beta, double fallback_accuracy) {
  if (samples.empty()) throw ValidationError("sweep_threshold: no samples");
  if (!std::is_sorted(taus.begin(), taus.end())) throw ValidationError("sweep_threshold: taus must be ascending");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("sweep_threshold: beta must lie in [0,1]");
  if (!(fallback_accuracy >= 0.0 && fallback_accuracy <= 1.0)) {
    throw ValidationError("sweep_threshold: fallback_accuracy must lie in [0,1]");
  }

  // Sorted by score: the accepted set at tau is a suffix.
  std::vector<ScoreSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoreSample& a, const ScoreSample& b) { return a.score < b.score; });
  std::vector<std::size_t> correct_suffix(sorted.size() + 1, 0);
  for (std::size_t i = sorted.size(); i-- > 0;) {
    correct_suffix[i] = correct_suffix[i + 1] + (sorted[i].correct ? 1 : 0);
  }

  const double n = static_cast<double>(sorted.size());
  std::vector<OperatingPoint> points;
  points.reserve(taus.size());
  for (double tau : taus) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), tau,
                                        [](const ScoreSample& s, double t) { return s.score < t; });
    const auto start = static_cast<std::size_t>(first - sorted.begin());
    const double accepted = n - static_cast<double>(start);
    const double accepted_correct = static_cast<double>(correct_suffix[start]);

    OperatingPoint p;
    p.tau = tau;
    p.acceptance_rate = accepted / n;
    // Everyone is answered at fallback accuracy except accepted drafts.
    p.accuracy = fallback_accuracy + beta * (accepted_correct - accepted * fallback_accuracy) / n;
    try {
      p.analytic_speedup = speedup_model(beta, p.acceptance_rate);
    } catch (const InfiniteSpeedup&) {
      p.analytic_speedup = std::numeric_limits<double>::infinity();
    }
    p.expected_latency_s = expected_latency(beta, p.acceptance_rate, costs.c_judge_s, costs.c_speculate_s,
                                            costs.agentic_mean_s);
    points.push_back(p);
  }
  return points;
}

std::vector<double> threshold_grid(std::span<const ScoreSample> samples, std::size_t count) {
  if (samples.empty()) throw ValidationError("threshold_grid: no samples");
  if (count == 0) throw ValidationError("threshold_grid: count must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const ScoreSample& a, const ScoreSample& b) { return a.score < b.score; });
  const double tiny = std::numeric_limits<double>::min();
  const double lo = std::clamp(lo_it->score, tiny, std::nextafter(1.0, 0.0));
  const double hi = std::clamp(hi_it->score, tiny, std::nextafter(1.0, 0.0));
  std::vector<double> taus(count, lo);
  for (std::size_t i = 1; i < count; ++i) {
    taus[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  if (count > 1) taus.back() = hi;
  return taus;
}

ThresholdChoice choose_threshold(std::span<const OperatingPoint> points, double baseline_accuracy) {
  if (points.empty()) throw ValidationError("choose_threshold: no operating points");
  const OperatingPoint* best = nullptr;
  for (const auto& p : points) {
    if (p.accuracy < baseline_accuracy) continue;
    if (!best || p.analytic_speedup > best->analytic_speedup ||
        (p.analytic_speedup == best->analytic_speedup &&
         (p.accuracy > best->accuracy || (p.accuracy == best->accuracy && p.tau < best->tau)))) {
      best = &p;
    }
  }
  if (best) return {*best, false};
  const auto most_accurate = std::max_element(
      points.begin(), points.end(),
      [](const OperatingPoint& a, const OperatingPoint& b) { return a.accuracy < b.accuracy; });
  return {*most_accurate, true};
}

UnionBoundReport union_bound_report(const ScoreCollection& collection, std::size_t num_bins) {
  if (num_bins == 0) throw ValidationError("union_bound_report: num_bins must be >= 1");
  UnionBoundReport report;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& trace : collection.token_scores) {
    for (double s : trace) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (!(hi >= lo)) return report;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(num_bins) : 1.0;
  auto bin_of = [&](double s) {
    return std::min(num_bins - 1, static_cast<std::size_t>((s - lo) / width));
  };

  std::vector<std::size_t> errors(num_bins, 0);
  report.bins.resize(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    report.bins[b].lower = lo + width * static_cast<double>(b);
    report.bins[b].upper = lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t a = 0; a < collection.samples.size(); ++a) {
    for (double s : collection.token_scores[a]) {
      const auto b = bin_of(s);
      ++report.bins[b].tokens;
      if (!collection.samples[a].correct) ++errors[b];
    }
  }
  double previous = std::numeric_limits<double>::infinity();
  report.monotone = true;
  for (std::size_t b = 0; b < num_bins; ++b) {
    auto& bin = report.bins[b];
    if (bin.tokens == 0) continue;
    bin.error_rate = static_cast<double>(errors[b]) / static_cast<double>(bin.tokens);
    if (bin.error_rate > previous) report.monotone = false;
    previous = bin.error_rate;
  }

  double bound_sum = 0.0;
  std::size_t wrong = 0;
  for (std::size_t a = 0; a < collection.samples.size(); ++a) {
    double bound = 0.0;
    for (double s : collection.token_scores[a]) bound += report.bins[bin_of(s)].error_rate;
    bound_sum += bound;
    if (!collection.samples[a].correct) ++wrong;
  }
  if (!collection.samples.empty()) {
    const double n = static_cast<double>(collection.samples.size());
    report.mean_union_bound = bound_sum / n;
    report.observed_error = static_cast<double>(wrong) / n;
  }
  return report;
}

}  // namespace specfunnel
