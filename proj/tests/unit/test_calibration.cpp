// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "specfunnel/calibration.hpp"
#include "specfunnel/error.hpp"
#include "specfunnel/funnel.hpp"
#include "specfunnel/synthetic_backend.hpp"

using namespace specfunnel;

namespace {

std::vector<double> cluster(double mean, double sd, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, sd);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = dist(rng);
  return xs;
}

double trapezoid(const KdeCurve& c) {
  double area = 0.0;
  for (std::size_t i = 1; i < c.grid.size(); ++i) {
    area += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
  }
  return area;
}

std::vector<ScoreSample> samples_from(const std::vector<std::pair<double, bool>>& xs) {
  std::vector<ScoreSample> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({"s" + std::to_string(i), xs[i].first, xs[i].second});
  return out;
}

}  // namespace

TEST_CASE("silverman bandwidth") {
  const std::vector<double> xs{0.1, 0.2, 0.3, 0.4, 0.5};
  // sd = 0.1581, IQR = 0.2 -> 0.1493; min = 0.1493.
  const double expected = 0.9 * (0.2 / 1.34) * std::pow(5.0, -0.2);
  CHECK(silverman_bandwidth(xs) == doctest::Approx(expected).epsilon(1e-12));
  // Zero IQR falls back to the standard deviation.
  const std::vector<double> spiky{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9};
  CHECK(silverman_bandwidth(spiky) > 0.0);
}

TEST_CASE("kde matches the reflection oracle and integrates to one") {
  const auto xs = cluster(0.5, 0.1, 200, 1);
  const auto curve = kde(xs);
  REQUIRE(curve.grid.size() == kKdeGridSize);
  CHECK(curve.grid.front() == 0.0);
  CHECK(curve.grid.back() == 1.0);
  const auto expected = oracle::kde_grid(xs, curve.bandwidth, kKdeGridSize);
  for (std::size_t i = 0; i < kKdeGridSize; ++i) {
    CHECK(curve.density[i] >= 0.0);
    CHECK(std::abs(curve.density[i] - static_cast<double>(expected[i])) <= 1e-9);
  }
  CHECK(std::abs(trapezoid(curve) - 1.0) <= 1e-2);

  // Mass near a boundary is reflected, not lost.
  const auto edge = cluster(0.02, 0.05, 200, 2);
  std::vector<double> clipped;
  for (double x : edge) clipped.push_back(std::clamp(x, 0.0, 1.0));
  CHECK(std::abs(trapezoid(kde(clipped)) - 1.0) <= 1e-2);
}

TEST_CASE("kde is symmetric under input order") {
  auto xs = cluster(0.4, 0.15, 100, 3);
  const auto a = kde(xs);
  std::reverse(xs.begin(), xs.end());
  const auto b = kde(xs);
  for (std::size_t i = 0; i < kKdeGridSize; ++i) CHECK(a.density[i] == doctest::Approx(b.density[i]).epsilon(1e-12));
}

TEST_CASE("kde degenerate inputs") {
  CHECK_THROWS_AS(kde(std::vector<double>{0.5, 0.5, 0.5}), DegenerateDistribution);
  CHECK_THROWS_AS(kde(std::vector<double>{0.5}), DegenerateDistribution);
  CHECK_THROWS_AS(kde(std::vector<double>{}), DegenerateDistribution);
  try {
    kde(std::vector<double>{0.3, 0.3});
    FAIL("expected DegenerateDistribution");
  } catch (const DegenerateDistribution& e) {
    CHECK(e.point_mass() == 0.3);
  }
  CHECK_THROWS_AS(peak_distance(std::vector<double>{0.9, 0.9}, cluster(0.2, 0.02, 50, 4)), DegenerateDistribution);
  CHECK_THROWS_AS(mean_distance(std::vector<double>{}, std::vector<double>{0.2}), DegenerateDistribution);
}

TEST_CASE("two clusters: modes and peak distance agree with the grid oracle") {
  const auto hi = cluster(0.9, 0.02, 400, 5);
  const auto lo = cluster(0.2, 0.02, 400, 6);
  const auto khi = kde(hi);
  const auto klo = kde(lo);
  const auto mean_hi = static_cast<double>(oracle::mean(hi));
  const auto mean_lo = static_cast<double>(oracle::mean(lo));
  CHECK(std::abs(khi.mode() - mean_hi) <= 0.01);
  CHECK(std::abs(klo.mode() - mean_lo) <= 0.01);
  const double oracle_delta =
      static_cast<double>(oracle::grid_argmax(oracle::kde_grid(hi, khi.bandwidth, kKdeGridSize)) -
                          oracle::grid_argmax(oracle::kde_grid(lo, klo.bandwidth, kKdeGridSize)));
  const double delta = peak_distance(hi, lo);
  CHECK(delta == doctest::Approx(oracle_delta).epsilon(1e-12));
  CHECK(std::abs(delta - 0.70) <= 0.02);
  CHECK(mean_distance(hi, lo) == doctest::Approx(mean_hi - mean_lo));
  CHECK(peak_distance(hi, hi) <= 1.0 / 511.0);
}

TEST_CASE("sweep extremes and monotonicity") {
  const auto samples = samples_from({{0.3, false}, {0.5, true}, {0.6, false}, {0.8, true}, {0.9, true}});
  const CostModel costs{0.1, 0.5, 10.0};
  const std::vector<double> taus{0.1, 0.5, 0.55, 0.85, 0.95};
  const auto points = sweep_threshold(samples, taus, costs, 0.8, 0.6);
  REQUIRE(points.size() == 5);
  CHECK(points.front().acceptance_rate == 1.0);
  CHECK(points.back().acceptance_rate == 0.0);
  CHECK(points.back().accuracy == 0.6);
  CHECK(points.back().analytic_speedup == 1.0);
  CHECK(points[1].acceptance_rate == 0.8);  // ties at tau are accepted
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].acceptance_rate <= points[i - 1].acceptance_rate);
    CHECK(points[i].analytic_speedup <= points[i - 1].analytic_speedup);
  }
  // tau = 0.55: 3 of 5 accepted, 2 of them correct.
  const auto& p = points[2];
  CHECK(p.acceptance_rate == doctest::Approx(0.6));
  CHECK(p.accuracy == doctest::Approx(0.6 + 0.8 * (2.0 - 3.0 * 0.6) / 5.0));
  CHECK(p.analytic_speedup == doctest::Approx(1.0 / (1.0 - 0.8 * 0.6)));
  CHECK(p.expected_latency_s == doctest::Approx(0.1 + 0.8 * 0.5 + (1.0 - 0.48) * 10.0));
  CHECK_FALSE(p.simulated_speedup);

  CHECK_THROWS_AS(sweep_threshold({}, taus, costs, 0.8, 0.6), ValidationError);
  const std::vector<double> unsorted{0.5, 0.4};
  CHECK_THROWS_AS(sweep_threshold(samples, unsorted, costs, 0.8, 0.6), ValidationError);
}

TEST_CASE("full acceptance at beta one is unbounded") {
  const auto samples = samples_from({{0.6, true}, {0.7, true}});
  const std::vector<double> taus{0.5};
  const auto points = sweep_threshold(samples, taus, CostModel{0.1, 0.2, 5.0}, 1.0, 0.5);
  CHECK(std::isinf(points[0].analytic_speedup));
}

TEST_CASE("threshold grid spans the observed scores") {
  const auto samples = samples_from({{0.3, false}, {0.9, true}, {0.6, true}});
  const auto grid = threshold_grid(samples, 33);
  REQUIRE(grid.size() == 33);
  CHECK(grid.front() == doctest::Approx(0.3));
  CHECK(grid.back() == doctest::Approx(0.9));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("choose_threshold rule") {
  const std::vector<OperatingPoint> two{{0.94, 0.8, 0.90, 2.1, 1.0, {}}, {0.97, 0.5, 0.92, 1.5, 2.0, {}}};
  auto c = choose_threshold(two, 0.91);
  CHECK(c.point.tau == 0.97);
  CHECK_FALSE(c.no_safe_point);

  c = choose_threshold(two, 0.95);
  CHECK(c.no_safe_point);
  CHECK(c.point.tau == 0.97);

  const std::vector<OperatingPoint> one{{0.5, 0.5, 0.9, 1.3, 1.0, {}}};
  CHECK(choose_threshold(one, 0.8).point.tau == 0.5);

  // Equal speedup: higher accuracy, then lower tau.
  const std::vector<OperatingPoint> tied{
      {0.6, 0.5, 0.91, 2.0, 1.0, {}}, {0.7, 0.5, 0.93, 2.0, 1.0, {}}, {0.8, 0.5, 0.93, 2.0, 1.0, {}}};
  CHECK(choose_threshold(tied, 0.9).point.tau == 0.7);
  CHECK_THROWS_AS(choose_threshold({}, 0.9), ValidationError);
}

TEST_CASE("collect_scores on a synthetic workload") {
  SyntheticConfig c;
  SyntheticBackend backend(c);
  const auto queries = make_workload(c, 600);
  GateConfig g;
  const auto a = collect_scores(queries, g, backend, 1);
  const auto b = collect_scores(queries, g, backend, 4);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.size() + a.excluded == queries.size());
  CHECK(a.token_scores.size() == a.samples.size());
  CHECK(a.beta_hat() == doctest::Approx(a.samples.size() / 600.0));
  CHECK(a.mean_judge_s == doctest::Approx(c.c_judge_s));
  CHECK(a.mean_speculate_s == doctest::Approx(c.c_speculate_s));
  for (const auto& s : a.samples) {
    CHECK(s.score > 0.0);
    CHECK(s.score < 1.0);
    CHECK(s.strategy == Strategy::Min);
  }

  auto missing = queries;
  missing[3].ground_truth.reset();
  CHECK_THROWS_AS(collect_scores(missing, g, backend), ValidationError);
}

TEST_CASE("noise-free generator: scores cluster at the generating margins") {
  SyntheticConfig c;
  c.sep_sigma = 0.0;
  c.judge_accuracy = 1.0;
  c.sep_mu_correct = 4.0;
  c.sep_mu_incorrect = 3.0;
  SyntheticBackend backend(c);
  const auto samples = collect_scores(make_workload(c, 300), GateConfig{}, backend).samples;
  for (const auto& s : samples) {
    const double mu = s.correct ? 4.0 : 3.0;
    CHECK(s.score == doctest::Approx(1.0 / (1.0 + std::exp(-mu))).epsilon(1e-6));
  }
}

TEST_CASE("Min acceptance equals the brute-force every-token filter") {
  SyntheticConfig c;
  SyntheticBackend backend(c);
  const auto queries = make_workload(c, 800);
  GateConfig g;
  const auto collection = collect_scores(queries, g, backend);
  const std::vector<double> taus{0.90, 0.92, 0.93, 0.94, 0.96, 0.98};
  for (double tau : taus) {
    const double cut = logit(tau);
    for (std::size_t i = 0; i < collection.samples.size(); ++i) {
      const bool accepted = collection.samples[i].score >= tau;
      const auto& tokens = collection.token_scores[i];
      const bool every = std::all_of(tokens.begin(), tokens.end(), [&](double s) { return s >= cut; });
      // Sigmoid rounding can only blur scores within an ulp of the cut.
      if (std::abs(*std::min_element(tokens.begin(), tokens.end()) - cut) > 1e-9) CHECK(accepted == every);
    }
  }
}

TEST_CASE("sweep with tau above every score matches agentic-only accuracy") {
  SyntheticConfig c;
  SyntheticBackend backend(c);
  const auto queries = make_workload(c, 1000);
  const auto collection = collect_scores(queries, GateConfig{}, backend);
  ScheduleConfig s;
  const auto baseline = serve_batch_baseline(queries, s, backend);
  int correct = 0;
  double mean_l = 0.0;
  for (const auto& o : baseline.outcomes) {
    correct += *o.correct;
    mean_l += o.latency.agentic_s;
  }
  const double fa = correct / 1000.0;
  mean_l /= 1000.0;
  double top = 0.0;
  for (const auto& smp : collection.samples) top = std::max(top, smp.score);
  const std::vector<double> taus{std::nextafter(top, 1.0)};
  const auto points = sweep_threshold(collection.samples, taus, CostModel{c.c_judge_s, c.c_speculate_s, mean_l},
                                      collection.beta_hat(), fa);
  CHECK(points[0].acceptance_rate == 0.0);
  CHECK(points[0].accuracy == fa);
}

TEST_CASE("union bound report") {
  SyntheticConfig c;
  SyntheticBackend backend(c);
  const auto collection = collect_scores(make_workload(c, 1000), GateConfig{}, backend);
  const auto report = union_bound_report(collection, 10);
  CHECK(report.bins.size() == 10);
  std::size_t tokens = 0;
  std::size_t expected_tokens = 0;
  for (const auto& t : collection.token_scores) expected_tokens += t.size();
  for (const auto& b : report.bins) {
    tokens += b.tokens;
    CHECK(b.error_rate >= 0.0);
    CHECK(b.error_rate <= 1.0);
    CHECK(b.lower <= b.upper);
  }
  CHECK(tokens == expected_tokens);
  CHECK(report.observed_error >= 0.0);
  CHECK(report.observed_error <= 1.0);
  CHECK(report.mean_union_bound >= 0.0);
}
