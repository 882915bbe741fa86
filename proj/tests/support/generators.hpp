#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "specfunnel/sep_gate.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Sorted-descending logits; occasionally with ties and large offsets.
inline std::vector<double> logits(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  const double spread = uniform(rng, 0.1, 8.0);
  const double offset = uniform(rng, -30.0, 30.0);
  for (auto& x : v) x = offset + spread * std::normal_distribution<double>(0.0, 1.0)(rng);
  if (n > 2 && uniform(rng, 0, 1) < 0.1) v[1] = v[0];
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

inline specfunnel::TokenLogits token(Rng& rng, int n) { return specfunnel::TokenLogits::from_sorted(logits(rng, n)); }

inline std::vector<specfunnel::TokenLogits> answer(Rng& rng, int max_tokens, int width) {
  std::vector<specfunnel::TokenLogits> a;
  const int len = uniform_int(rng, 1, max_tokens);
  for (int i = 0; i < len; ++i) a.push_back(token(rng, width));
  return a;
}

inline std::vector<double> scores(Rng& rng, int max_len) {
  std::vector<double> s(static_cast<std::size_t>(uniform_int(rng, 1, max_len)));
  for (auto& x : s) x = uniform(rng, 0.0, 10.0);
  if (s.size() > 3 && uniform(rng, 0, 1) < 0.2) s[2] = s[0];
  return s;
}

}  // namespace gen
