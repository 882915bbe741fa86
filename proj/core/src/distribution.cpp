// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/distribution.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "specfunnel/error.hpp"

namespace specfunnel {

DiscreteDistribution::DiscreteDistribution(std::vector<int> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty() || support_.size() != weights_.size()) {
    throw ValidationError("discrete distribution needs matching, non-empty values and weights");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("discrete weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("discrete weights sum to zero");
  double run = 0.0;
  cumulative_.reserve(weights_.size());
  for (double& w : weights_) {
    w /= total;
    run += w;
    cumulative_.push_back(run);
  }
  cumulative_.back() = 1.0;
}

int DiscreteDistribution::sample(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                         support_.size() - 1);
  return support_[idx];
}

double DiscreteDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) m += weights_[i] * support_[i];
  return m;
}

int DiscreteDistribution::min() const { return *std::min_element(support_.begin(), support_.end()); }
int DiscreteDistribution::max() const { return *std::max_element(support_.begin(), support_.end()); }

double CostDistribution::sample(Rng& rng) const {
  if (kind == Kind::Point) return low;
  return low + (high - low) * uniform01(rng);
}

void CostDistribution::validate(const std::string& field) const {
  if (!(low >= 0.0) || !std::isfinite(low) || !std::isfinite(high) || high < low) {
    throw ValidationError(fmt::format("{}: costs must be finite, >= 0, with low <= high", field));
  }
}

void to_json(nlohmann::json& j, const DiscreteDistribution& d) {
  j = nlohmann::json{{"values", d.support()}, {"weights", d.weights()}};
}

void from_json(const nlohmann::json& j, DiscreteDistribution& d) {
  if (j.is_number_integer()) {
    d = DiscreteDistribution::point(j.get<int>());
    return;
  }
  d = DiscreteDistribution(j.at("values").get<std::vector<int>>(),
                           j.at("weights").get<std::vector<double>>());
}

void to_json(nlohmann::json& j, const CostDistribution& d) {
  if (d.kind == CostDistribution::Kind::Point) {
    j = d.low;
  } else {
    j = nlohmann::json{{"uniform", {d.low, d.high}}};
  }
}

void from_json(const nlohmann::json& j, CostDistribution& d) {
  if (j.is_number()) {
    d = CostDistribution::point(j.get<double>());
    return;
  }
  const auto range = j.at("uniform").get<std::vector<double>>();
  if (range.size() != 2) throw ValidationError("uniform cost needs [low, high]");
  d = CostDistribution::uniform(range[0], range[1]);
}

}  // namespace specfunnel
