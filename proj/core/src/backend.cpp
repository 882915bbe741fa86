// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/backend.hpp"

#include <fmt/format.h>

#include "specfunnel/error.hpp"

namespace specfunnel {

void Query::validate() const {
  if (id.empty()) throw ValidationError("query.id must be non-empty");
  if (true_depth && *true_depth < 0) {
    throw ValidationError(fmt::format("query {}: true_depth must be >= 0", id));
  }
}

double total_step_cost(const std::vector<StepCost>& steps) noexcept {
  double total = 0.0;
  for (const auto& s : steps) total += s.llm_s + s.tool_s;
  return total;
}

}  // namespace specfunnel
