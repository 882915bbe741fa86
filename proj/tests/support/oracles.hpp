#pragma once

// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations in long double. They share no
// code with the library: plain loops, no early exits, no clamping tricks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Real = long double;

inline Real separability(const std::vector<double>& values, std::size_t k, Real eps) {
  const std::size_t n = std::min(k, values.size());
  Real sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += values[i];
  const Real mean = sum / n;
  Real sq = 0;
  for (std::size_t i = 0; i < n; ++i) sq += (values[i] - mean) * (values[i] - mean);
  const Real sd = std::sqrt(sq / n);
  const Real num = values[0] - mean;
  if (num <= 0) return 0;
  return num / (sd + eps);
}

inline Real max_softmax(const std::vector<double>& values) {
  Real z = 0;
  for (double v : values) z += std::exp(static_cast<Real>(v) - values[0]);
  return 1 / z;
}

inline Real log_confidence(const std::vector<std::vector<double>>& answer) {
  Real acc = 0;
  for (const auto& t : answer) acc += std::log(max_softmax(t));
  return std::exp(acc / answer.size());
}

inline Real mean(const std::vector<double>& xs) {
  Real s = 0;
  for (double x : xs) s += x;
  return s / xs.size();
}

inline Real minimum(const std::vector<double>& xs) { return *std::min_element(xs.begin(), xs.end()); }

// Mean of the ceil(r * n) smallest values.
inline Real bottom_mean(std::vector<double> xs, double r) {
  std::sort(xs.begin(), xs.end());
  auto m = static_cast<std::size_t>(std::ceil(static_cast<Real>(r) * xs.size()));
  m = std::clamp<std::size_t>(m, 1, xs.size());
  Real s = 0;
  for (std::size_t i = 0; i < m; ++i) s += xs[i];
  return s / m;
}

inline Real sigmoid(Real x) { return 1 / (1 + std::exp(-x)); }

// Type-7 sample quantile.
inline Real quantile(std::vector<double> xs, Real p) {
  std::sort(xs.begin(), xs.end());
  const Real h = (xs.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - lo) * (static_cast<Real>(xs[hi]) - xs[lo]);
}

// Silverman's rule with the sample standard deviation.
inline Real silverman(const std::vector<double>& xs) {
  const Real m = mean(xs);
  Real sq = 0;
  for (double x : xs) sq += (x - m) * (x - m);
  const Real sd = std::sqrt(sq / (xs.size() - 1));
  const Real iqr = quantile(xs, 0.75L) - quantile(xs, 0.25L);
  const Real spread = iqr > 0 ? std::min(sd, iqr / 1.34L) : sd;
  return 0.9L * spread * std::pow(static_cast<Real>(xs.size()), -0.2L);
}

// Gaussian KDE with reflection at 0 and 1, evaluated on n_grid points.
inline std::vector<Real> kde_grid(const std::vector<double>& xs, Real h, std::size_t n_grid) {
  const Real pi = std::acos(Real(-1));
  std::vector<Real> out(n_grid);
  for (std::size_t g = 0; g < n_grid; ++g) {
    const Real x = static_cast<Real>(g) / (n_grid - 1);
    Real s = 0;
    for (double v : xs) {
      for (Real c : {Real(v), Real(-v), Real(2) - v}) s += std::exp(-(x - c) * (x - c) / (2 * h * h));
    }
    out[g] = s / (xs.size() * h * std::sqrt(2 * pi));
  }
  return out;
}

inline Real grid_argmax(const std::vector<Real>& density) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < density.size(); ++i) {
    if (density[i] > density[best]) best = i;
  }
  return static_cast<Real>(best) / (density.size() - 1);
}

// Earliest-free-worker FIFO schedule simulated event by event.
inline double fifo_makespan(const std::vector<double>& jobs, int workers) {
  std::vector<double> busy_until(workers, 0.0);
  double end = 0.0;
  for (double j : jobs) {
    int pick = 0;
    for (int w = 1; w < workers; ++w) {
      if (busy_until[w] < busy_until[pick]) pick = w;
    }
    busy_until[pick] += j;
    end = std::max(end, busy_until[pick]);
  }
  return end;
}

}  // namespace oracle
