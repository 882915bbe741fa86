// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/pipeline.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "specfunnel/error.hpp"

namespace specfunnel {

namespace {

std::string normalize_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char raw : s) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// "b", "(b)", "b.", "b)" -> 'b'; anything else -> 0.
char choice_letter(std::string_view token) {
  while (!token.empty() && (token.front() == '(' || token.front() == '[')) token.remove_prefix(1);
  while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
  if (token.size() == 1 && std::isalpha(static_cast<unsigned char>(token.front()))) return token.front();
  return 0;
}

void add_diagnostic(QueryOutcome& outcome, const std::string& message) {
  if (!outcome.diagnostic.empty()) outcome.diagnostic += "; ";
  outcome.diagnostic += message;
}

}  // namespace

std::string_view to_string(Path p) noexcept {
  switch (p) {
    case Path::JudgedToolRequired: return "judged_tool_required->fallback";
    case Path::SpeculationAccepted: return "speculation_accepted";
    case Path::SpeculationRejected: return "speculation_rejected->fallback";
    case Path::AgenticOnly: return "agentic_only";
  }
  return "?";
}

Path parse_path(std::string_view s) {
  for (auto p : {Path::JudgedToolRequired, Path::SpeculationAccepted, Path::SpeculationRejected,
                 Path::AgenticOnly}) {
    if (to_string(p) == s) return p;
  }
  throw ValidationError(fmt::format("unknown path '{}'", s));
}

bool answers_match(std::string_view answer, std::string_view truth) {
  const auto a = normalize_text(answer);
  const auto t = normalize_text(truth);
  if (const char letter = choice_letter(t)) {
    const auto first = a.substr(0, a.find(' '));
    return choice_letter(first) == letter;
  }
  return a == t;
}

namespace phase {

bool judge(const Query& query, Backend& backend, QueryOutcome& outcome) {
  try {
    const auto out = backend.judge(query);
    outcome.latency.judge_s = out.latency_s;
    if (out.g == 0) return true;
  } catch (const BackendUnavailable& e) {
    add_diagnostic(outcome, fmt::format("judge unavailable: {}", e.what()));
  }
  outcome.path = Path::JudgedToolRequired;
  return false;
}

bool speculate_and_gate(const Query& query, const GateConfig& config, Backend& backend,
                        QueryOutcome& outcome) {
  outcome.path = Path::SpeculationRejected;
  SpeculativeAnswer draft;
  try {
    draft = backend.speculate(query);
  } catch (const BackendUnavailable& e) {
    add_diagnostic(outcome, fmt::format("speculate unavailable: {}", e.what()));
    return false;
  }
  outcome.latency.speculate_s = draft.latency_s;
  auto decision = gate(draft.token_logits, config);
  if (decision.empty_answer) add_diagnostic(outcome, "empty speculative answer");
  if (decision.k_clamped) add_diagnostic(outcome, "top-k clamped to available logits");
  const bool accepted = decision.verdict == Verdict::Accept;
  outcome.gate = std::move(decision);
  if (accepted) {
    outcome.path = Path::SpeculationAccepted;
    outcome.answer = std::move(draft.answer);
  }
  return accepted;
}

void fallback(const Query& query, Backend& backend, QueryOutcome& outcome) {
  try {
    const auto out = backend.agentic_run(query);
    outcome.answer = out.answer;
    outcome.latency.agentic_s = out.latency_s;
    outcome.agentic_depth = out.depth;
    outcome.truncated = out.truncated;
  } catch (const BackendUnavailable& e) {
    outcome.failed = true;
    outcome.answer.clear();
    add_diagnostic(outcome, fmt::format("agentic unavailable: {}", e.what()));
  }
}

void finish(const Query& query, QueryOutcome& outcome) {
  outcome.total_latency_s = outcome.latency.judge_s + outcome.latency.speculate_s + outcome.latency.agentic_s;
  if (query.ground_truth) {
    outcome.correct = !outcome.failed && answers_match(outcome.answer, *query.ground_truth);
  }
}

}  // namespace phase

QueryOutcome process_query(const Query& query, const GateConfig& config, Backend& backend) {
  config.validate();
  query.validate();
  QueryOutcome outcome;
  outcome.query_id = query.id;
  if (phase::judge(query, backend, outcome) &&
      phase::speculate_and_gate(query, config, backend, outcome)) {
    phase::finish(query, outcome);
    return outcome;
  }
  phase::fallback(query, backend, outcome);
  phase::finish(query, outcome);
  return outcome;
}

QueryOutcome process_query_agentic_only(const Query& query, Backend& backend) {
  query.validate();
  QueryOutcome outcome;
  outcome.query_id = query.id;
  outcome.path = Path::AgenticOnly;
  phase::fallback(query, backend, outcome);
  phase::finish(query, outcome);
  return outcome;
}

double expected_latency(double beta, double alpha, double c_judge, double c_speculate,
                        double agentic_mean) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError(fmt::format("beta must lie in [0,1], got {}", beta));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(fmt::format("alpha must lie in [0,1], got {}", alpha));
  if (!(c_judge >= 0.0) || !(c_speculate >= 0.0) || !(agentic_mean >= 0.0)) {
    throw ValidationError("costs must be >= 0");
  }
  return c_judge + beta * c_speculate + (1.0 - beta * alpha) * agentic_mean;
}

}  // namespace specfunnel
