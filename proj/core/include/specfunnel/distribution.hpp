#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "specfunnel/rng.hpp"

namespace specfunnel {

/// Finite discrete distribution over integer outcomes.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  /// Weights need not sum to one. Throws ValidationError on negative or
  /// all-zero weights, or mismatched sizes.
  DiscreteDistribution(std::vector<int> support, std::vector<double> weights);

  static DiscreteDistribution point(int value) { return {{value}, {1.0}}; }

  int sample(Rng& rng) const;
  double mean() const;
  int min() const;
  int max() const;

  const std::vector<int>& support() const noexcept { return support_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<int> support_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Non-negative duration distribution in seconds.
struct CostDistribution {
  enum class Kind { Point, Uniform };
  Kind kind = Kind::Point;
  double low = 0.0;
  double high = 0.0;

  static CostDistribution point(double v) { return {Kind::Point, v, v}; }
  static CostDistribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }

  double sample(Rng& rng) const;
  double mean() const noexcept { return 0.5 * (low + high); }
  void validate(const std::string& field) const;
};

void to_json(nlohmann::json& j, const DiscreteDistribution& d);
void from_json(const nlohmann::json& j, DiscreteDistribution& d);
void to_json(nlohmann::json& j, const CostDistribution& d);
void from_json(const nlohmann::json& j, CostDistribution& d);

}  // namespace specfunnel
