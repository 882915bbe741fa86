#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * @file calibration.hpp
 * @brief Offline threshold selection and confidence-distribution analytics.
 *
 * Workflow: collect_scores() runs the draft model once per query and
 * records (score, correct). sweep_threshold() turns that distribution
 * into operating points; choose_threshold() picks the fastest point that
 * keeps baseline accuracy. kde() / peak_distance() measure how far apart
 * the correct and incorrect score densities sit.
 */

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specfunnel/backend.hpp"
#include "specfunnel/sep_gate.hpp"

namespace specfunnel {

struct ScoreSample {
  std::string query_id;
  /// Normalized gate score.
  double score = 0.0;
  bool correct = false;
  Strategy strategy = Strategy::Min;

  friend bool operator==(const ScoreSample&, const ScoreSample&) = default;
};

struct ScoreCollection {
  /// One sample per query judged tool-free, in input order.
  std::vector<ScoreSample> samples;
  /// Raw per-token separability trace, parallel to samples.
  std::vector<std::vector<double>> token_scores;
  /// Queries judged tool-required (or whose judge/speculate failed).
  std::size_t excluded = 0;
  /// Mean observed judge latency over all queries judged successfully.
  double mean_judge_s = 0.0;
  /// Mean observed speculate latency over the samples.
  double mean_speculate_s = 0.0;

  /// Fraction of queries judged tool-free.
  double beta_hat() const noexcept;
};

/// Judge + speculate + score, once per query; no threshold, no fallback.
/// Throws ValidationError if any query lacks ground truth.
ScoreCollection collect_scores(std::span<const Query> queries, const GateConfig& config,
                               Backend& backend, int workers = 1);

inline constexpr std::size_t kKdeGridSize = 512;

struct KdeCurve {
  /// kKdeGridSize evenly spaced points over [0, 1].
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;

  /// Grid point with the highest density (first one on ties).
  double mode() const;
};

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5); falls back to sd when IQR is 0.
double silverman_bandwidth(std::span<const double> scores);

/// Gaussian KDE on [0,1], boundary mass reflected back inside. Without an
/// explicit bandwidth, Silverman's rule is used, floored at the grid
/// spacing. Throws
/// DegenerateDistribution for fewer than 2 scores or zero variance.
KdeCurve kde(std::span<const double> scores, std::optional<double> bandwidth = std::nullopt);

/// |mode(KDE correct) - mode(KDE incorrect)|.
double peak_distance(std::span<const double> correct_scores, std::span<const double> incorrect_scores);

/// |mean(correct) - mean(incorrect)|, reported alongside the peak distance.
double mean_distance(std::span<const double> correct_scores, std::span<const double> incorrect_scores);

struct OperatingPoint {
  double tau = 0.0;
  double acceptance_rate = 0.0;
  double accuracy = 0.0;
  double analytic_speedup = 1.0;
  double expected_latency_s = 0.0;
  std::optional<double> simulated_speedup;

  friend bool operator==(const OperatingPoint&, const OperatingPoint&) = default;
};

struct CostModel {
  double c_judge_s = 0.0;
  double c_speculate_s = 0.0;
  double agentic_mean_s = 0.0;
};

/// Evaluates each tau: acceptance among tool-free samples, blended
/// accuracy (accepted draft answers, everything else at fallback
/// accuracy), analytic speedup and expected latency. Throws
/// ValidationError on empty samples or unsorted taus.
std::vector<OperatingPoint> sweep_threshold(std::span<const ScoreSample> samples,
                                            std::span<const double> taus, const CostModel& costs,
                                            double beta, double fallback_accuracy);

/// `count` evenly spaced taus from the smallest to the largest score,
/// clipped into (0,1).
std::vector<double> threshold_grid(std::span<const ScoreSample> samples, std::size_t count = 33);

struct ThresholdChoice {
  OperatingPoint point;
  /// No point reached the baseline accuracy; point is the most accurate one.
  bool no_safe_point = false;
};

/// Fastest point with accuracy >= baseline (ties: higher accuracy, then
/// lower tau). Throws ValidationError on an empty list.
ThresholdChoice choose_threshold(std::span<const OperatingPoint> points, double baseline_accuracy);

/// Empirical check of the union-bound argument behind Min aggregation.
struct UnionBoundReport {
  struct Bin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t tokens = 0;
    /// Fraction of tokens in the bin that belong to an incorrect answer.
    double error_rate = 0.0;
  };
  std::vector<Bin> bins;
  /// Error rate never increases with separability over non-empty bins.
  bool monotone = false;
  /// Mean over answers of sum_n P(E_n), with P(E_n) read off the bins.
  double mean_union_bound = 0.0;
  /// Observed answer error rate P(E).
  double observed_error = 0.0;
};

UnionBoundReport union_bound_report(const ScoreCollection& collection, std::size_t num_bins = 10);

}  // namespace specfunnel
