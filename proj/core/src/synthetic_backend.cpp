// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "json_fields.hpp"
#include "specfunnel/error.hpp"

namespace specfunnel {

namespace {

void check_probability(double p, std::string_view field) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(fmt::format("synthetic.{} must lie in [0,1], got {}", field, p));
  }
}

void check_cost(double c, std::string_view field) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw ValidationError(fmt::format("synthetic.{} must be a finite cost >= 0, got {}", field, c));
  }
}

bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Tail below the runner-up: 0, -1, -1 - d, -1 - d - d^2, ...
std::vector<double> tail_values(int count, double decay) {
  std::vector<double> tail(static_cast<std::size_t>(std::max(count, 0)));
  double value = 0.0;
  double gap = 1.0;
  for (auto& t : tail) {
    t = value;
    value -= gap;
    gap *= decay;
  }
  return tail;
}

struct TailMoments {
  double mean;
  double variance;  // population
};

TailMoments moments(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, sq / n};
}

// Separability of a top value sitting `lead` above the tail mean, with
// `window` values in total (the top plus window - 1 tail values).
double separability_for_lead(double lead, int window, double tail_variance) {
  const double n = window;
  return lead * std::sqrt(n - 1.0) / std::sqrt(lead * lead + n * tail_variance);
}

}  // namespace

void SyntheticConfig::validate() const {
  if (vocab_k < 2) throw ValidationError("synthetic.vocab_k must be >= 2");
  if (sep_reference_k < 2) throw ValidationError("synthetic.sep_reference_k must be >= 2");
  if (!(tail_decay > 0.0 && tail_decay <= 1.0)) {
    throw ValidationError("synthetic.tail_decay must lie in (0,1]");
  }
  if (!(logit_scale_low > 0.0) || !(logit_scale_high >= logit_scale_low)) {
    throw ValidationError("synthetic.logit_scale_low/high must satisfy 0 < low <= high");
  }
  check_probability(p_tool_required, "p_tool_required");
  check_probability(draft_accuracy_toolfree, "draft_accuracy_toolfree");
  check_probability(draft_accuracy_toolreq, "draft_accuracy_toolreq");
  check_probability(agentic_accuracy, "agentic_accuracy");
  check_probability(judge_accuracy, "judge_accuracy");
  if (depth_cap < 0) throw ValidationError("synthetic.depth_cap must be >= 0");
  if (depth_distribution.support().empty() || depth_distribution.min() < 0) {
    throw ValidationError("synthetic.depth_distribution must be over non-negative depths");
  }
  if (answer_len_distribution.support().empty() || answer_len_distribution.min() < 1) {
    throw ValidationError("synthetic.answer_len_distribution must be over lengths >= 1");
  }
  if (!(sep_mu_correct > sep_mu_incorrect)) {
    throw ValidationError("synthetic.sep_mu_correct must exceed sep_mu_incorrect");
  }
  if (!(sep_sigma >= 0.0)) throw ValidationError("synthetic.sep_sigma must be >= 0");
  if (num_choices < 2 || num_choices > 26) throw ValidationError("synthetic.num_choices must lie in [2,26]");
  check_cost(c_judge_s, "c_judge_s");
  check_cost(c_speculate_s, "c_speculate_s");
  check_cost(c_llm_s, "c_llm_s");
  tool_cost.validate("synthetic.tool_cost");
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json{
      {"seed", c.seed},
      {"vocab_k", c.vocab_k},
      {"sep_reference_k", c.sep_reference_k},
      {"tail_decay", c.tail_decay},
      {"logit_scale_low", c.logit_scale_low},
      {"logit_scale_high", c.logit_scale_high},
      {"p_tool_required", c.p_tool_required},
      {"depth_distribution", c.depth_distribution},
      {"depth_cap", c.depth_cap},
      {"draft_accuracy_toolfree", c.draft_accuracy_toolfree},
      {"draft_accuracy_toolreq", c.draft_accuracy_toolreq},
      {"agentic_accuracy", c.agentic_accuracy},
      {"judge_accuracy", c.judge_accuracy},
      {"sep_mu_correct", c.sep_mu_correct},
      {"sep_mu_incorrect", c.sep_mu_incorrect},
      {"sep_sigma", c.sep_sigma},
      {"answer_len_distribution", c.answer_len_distribution},
      {"num_choices", c.num_choices},
      {"c_judge_s", c.c_judge_s},
      {"c_speculate_s", c.c_speculate_s},
      {"c_llm_s", c.c_llm_s},
      {"tool_cost", c.tool_cost},
  };
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  using detail::read_field;
  detail::reject_unknown(
      j, {"seed", "vocab_k", "sep_reference_k", "tail_decay", "logit_scale_low", "logit_scale_high",
          "p_tool_required", "depth_distribution", "depth_cap", "draft_accuracy_toolfree",
          "draft_accuracy_toolreq", "agentic_accuracy", "judge_accuracy", "sep_mu_correct",
          "sep_mu_incorrect", "sep_sigma", "answer_len_distribution", "num_choices", "c_judge_s",
          "c_speculate_s", "c_llm_s", "tool_cost"});
  read_field(j, "seed", c.seed);
  read_field(j, "vocab_k", c.vocab_k);
  read_field(j, "sep_reference_k", c.sep_reference_k);
  read_field(j, "tail_decay", c.tail_decay);
  read_field(j, "logit_scale_low", c.logit_scale_low);
  read_field(j, "logit_scale_high", c.logit_scale_high);
  read_field(j, "p_tool_required", c.p_tool_required);
  read_field(j, "depth_distribution", c.depth_distribution);
  read_field(j, "depth_cap", c.depth_cap);
  read_field(j, "draft_accuracy_toolfree", c.draft_accuracy_toolfree);
  read_field(j, "draft_accuracy_toolreq", c.draft_accuracy_toolreq);
  read_field(j, "agentic_accuracy", c.agentic_accuracy);
  read_field(j, "judge_accuracy", c.judge_accuracy);
  read_field(j, "sep_mu_correct", c.sep_mu_correct);
  read_field(j, "sep_mu_incorrect", c.sep_mu_incorrect);
  read_field(j, "sep_sigma", c.sep_sigma);
  read_field(j, "answer_len_distribution", c.answer_len_distribution);
  read_field(j, "num_choices", c.num_choices);
  read_field(j, "c_judge_s", c.c_judge_s);
  read_field(j, "c_speculate_s", c.c_speculate_s);
  read_field(j, "c_llm_s", c.c_llm_s);
  read_field(j, "tool_cost", c.tool_cost);
}

std::vector<Query> make_workload(const SyntheticConfig& config, std::size_t n,
                                 std::optional<QuotaSpec> quota, std::size_t first_index) {
  config.validate();
  std::vector<Query> queries;
  queries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Query q;
    q.id = fmt::format("q{:06d}", first_index + i);
    q.image_ref = fmt::format("synthetic://image/{}", first_index + i);
    q.question = fmt::format("synthetic question {}", first_index + i);
    auto rng = make_rng(stream_key(config.seed, q.id, Phase::Workload));
    q.true_requires_tools = bernoulli(rng, config.p_tool_required);
    q.true_depth = config.depth_distribution.sample(rng);
    const auto choice = static_cast<int>(uniform01(rng) * config.num_choices);
    q.ground_truth = std::string(1, static_cast<char>('A' + std::min(choice, config.num_choices - 1)));
    queries.push_back(std::move(q));
  }
  if (!quota) return queries;

  if (!(quota->beta >= 0.0 && quota->beta <= 1.0 && quota->alpha >= 0.0 && quota->alpha <= 1.0)) {
    throw ValidationError("workload.quota beta/alpha must lie in [0,1]");
  }
  if (config.judge_accuracy != 1.0) {
    throw ValidationError("workload.quota requires synthetic.judge_accuracy == 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(stream_key(config.seed, "", Phase::Quota, first_index));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_toolfree = static_cast<std::size_t>(std::llround(quota->beta * static_cast<double>(n)));
  const auto n_correct =
      static_cast<std::size_t>(std::llround(quota->alpha * static_cast<double>(n_toolfree)));
  for (std::size_t rank = 0; rank < n; ++rank) {
    auto& q = queries[order[rank]];
    q.true_requires_tools = rank >= n_toolfree;
    q.draft_correct = rank < n_correct;
  }
  return queries;
}

SeparabilityRange realizable_separability(int reference_k, double tail_decay) {
  if (reference_k < 2) throw ValidationError("reference_k must be >= 2");
  const auto tail = tail_values(reference_k - 1, tail_decay);
  const auto m = moments(tail);
  const double low = separability_for_lead(tail.front() - m.mean, reference_k, m.variance);
  const double high = 0.98 * std::sqrt(static_cast<double>(reference_k - 1));
  return {low, std::max(low, high)};
}

TokenLogits synthesize_token_logits(double target_sep, int vocab_k, int reference_k,
                                    double tail_decay, double scale, double offset) {
  if (vocab_k < 2) throw ValidationError("vocab_k must be >= 2");
  const int window = std::min(vocab_k, reference_k);
  const auto tail = tail_values(vocab_k - 1, tail_decay);
  const auto m = moments(std::span<const double>(tail).first(static_cast<std::size_t>(window - 1)));

  const auto range = realizable_separability(window, tail_decay);
  const double s = std::clamp(std::isfinite(target_sep) ? target_sep : 0.0, range.low, range.high);
  const double n = window;
  // Inverts separability_for_lead(lead) = s.
  double lead = s * std::sqrt(n * m.variance / (n - 1.0 - s * s));
  double top = std::max(m.mean + lead, tail.front());

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(vocab_k));
  values.push_back(offset + scale * top);
  for (double t : tail) values.push_back(offset + scale * t);
  return TokenLogits::from_sorted(std::move(values));
}

std::uint64_t next_agentic_state(std::uint64_t state, std::uint64_t observation) noexcept {
  return combine(state, observation);
}

AgenticStep agentic_step(const SyntheticConfig& config, std::uint64_t state) {
  auto rng = make_rng(state);
  AgenticStep step{};
  step.tool_cost_s = config.tool_cost.sample(rng);
  step.observation = rng();
  step.next_state = next_agentic_state(state, step.observation);
  return step;
}

SyntheticBackend::SyntheticBackend(SyntheticConfig config) : config_(std::move(config)) {
  config_.validate();
}

JudgeOutput SyntheticBackend::judge(const Query& query) {
  auto rng = make_rng(stream_key(config_.seed, query.id, Phase::Judge));
  const bool requires_tools = query.true_requires_tools.value_or(false);
  const bool flip = bernoulli(rng, 1.0 - config_.judge_accuracy);
  return JudgeOutput{(requires_tools != flip) ? 1 : 0, config_.c_judge_s};
}

std::string SyntheticBackend::answer_text(const Query& query, bool correct, Rng& rng) const {
  const std::string truth = query.ground_truth.value_or("A");
  if (correct) return truth;
  // A wrong choice letter; falls back to a marker for free-form truths.
  if (truth.size() == 1 && truth[0] >= 'A' && truth[0] < 'A' + config_.num_choices) {
    const int offset = 1 + static_cast<int>(uniform01(rng) * (config_.num_choices - 1));
    const int wrong = (truth[0] - 'A' + std::min(offset, config_.num_choices - 1)) % config_.num_choices;
    return std::string(1, static_cast<char>('A' + wrong));
  }
  return truth + " (wrong)";
}

SpeculativeAnswer SyntheticBackend::speculate(const Query& query) {
  auto rng = make_rng(stream_key(config_.seed, query.id, Phase::Speculate));
  const bool requires_tools = query.true_requires_tools.value_or(false);
  const double accuracy =
      requires_tools ? config_.draft_accuracy_toolreq : config_.draft_accuracy_toolfree;
  const bool draw = bernoulli(rng, accuracy);
  const bool correct = query.draft_correct.value_or(draw);

  SpeculativeAnswer out;
  out.answer = answer_text(query, correct, rng);
  const int length = config_.answer_len_distribution.sample(rng);
  const double mu = correct ? config_.sep_mu_correct : config_.sep_mu_incorrect;
  std::normal_distribution<double> margin(0.0, 1.0);
  out.token_logits.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    const double z = margin(rng);
    const double target = std::max(0.0, mu + config_.sep_sigma * z);
    const double scale =
        config_.logit_scale_low + (config_.logit_scale_high - config_.logit_scale_low) * uniform01(rng);
    const double offset = 10.0 * uniform01(rng);
    out.token_logits.push_back(synthesize_token_logits(target, config_.vocab_k, config_.sep_reference_k,
                                                       config_.tail_decay, scale, offset));
  }
  out.latency_s = config_.c_speculate_s;
  return out;
}

AgenticOutput SyntheticBackend::agentic_run(const Query& query) {
  int natural_depth = 0;
  if (query.true_depth) {
    natural_depth = *query.true_depth;
  } else {
    auto rng = make_rng(stream_key(config_.seed, query.id, Phase::Workload));
    natural_depth = config_.depth_distribution.sample(rng);
  }
  if (natural_depth < 0) throw ValidationError(fmt::format("query {}: true_depth < 0", query.id));

  AgenticOutput out;
  out.depth = std::min(natural_depth, config_.depth_cap);
  out.truncated = natural_depth > config_.depth_cap;
  std::uint64_t state = stream_key(config_.seed, query.id, Phase::Agentic);
  for (int d = 0; d < out.depth; ++d) {
    const auto step = agentic_step(config_, state);
    out.step_costs.push_back({config_.c_llm_s, step.tool_cost_s});
    state = step.next_state;
  }
  // Terminal step: reason over the final state and emit the answer.
  out.step_costs.push_back({config_.c_llm_s, 0.0});
  auto rng = make_rng(state);
  const bool correct = bernoulli(rng, config_.agentic_accuracy);
  out.answer = answer_text(query, correct, rng);
  out.latency_s = total_step_cost(out.step_costs);
  return out;
}

}  // namespace specfunnel
