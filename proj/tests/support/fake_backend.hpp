#pragma once

// SPDX-License-Identifier: Apache-2.0

// Scriptable backend: fixed responses per query id, optional failures,
// and call counters.

#include <atomic>
#include <map>
#include <string>

#include "specfunnel/backend.hpp"
#include "specfunnel/error.hpp"

namespace fake {

struct Script {
  int g = 0;
  std::string draft = "A";
  std::vector<specfunnel::TokenLogits> logits;
  std::string agentic_answer = "A";
  int depth = 1;
  std::vector<specfunnel::StepCost> steps{{1.0, 0.5}, {1.0, 0.0}};
  bool judge_fails = false;
  bool speculate_fails = false;
  bool agentic_fails = false;
};

class Backend final : public specfunnel::Backend {
 public:
  double c_judge = 0.1;
  double c_speculate = 0.5;
  std::map<std::string, Script> scripts;
  std::atomic<int> judge_calls{0};
  std::atomic<int> speculate_calls{0};
  std::atomic<int> agentic_calls{0};

  specfunnel::JudgeOutput judge(const specfunnel::Query& q) override {
    ++judge_calls;
    const auto& s = scripts.at(q.id);
    if (s.judge_fails) throw specfunnel::BackendUnavailable("judge down");
    return {s.g, c_judge};
  }

  specfunnel::SpeculativeAnswer speculate(const specfunnel::Query& q) override {
    ++speculate_calls;
    const auto& s = scripts.at(q.id);
    if (s.speculate_fails) throw specfunnel::BackendUnavailable("draft down");
    return {s.draft, s.logits, c_speculate};
  }

  specfunnel::AgenticOutput agentic_run(const specfunnel::Query& q) override {
    ++agentic_calls;
    const auto& s = scripts.at(q.id);
    if (s.agentic_fails) throw specfunnel::BackendUnavailable("agent down");
    specfunnel::AgenticOutput out;
    out.answer = s.agentic_answer;
    out.depth = s.depth;
    out.step_costs = s.steps;
    out.latency_s = specfunnel::total_step_cost(s.steps);
    return out;
  }
};

}  // namespace fake
