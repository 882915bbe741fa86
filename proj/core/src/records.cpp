// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/records.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "json_fields.hpp"
#include "specfunnel/error.hpp"

namespace specfunnel {

using nlohmann::json;

namespace {

// JSON has no infinity; +inf is written as null and read back as +inf.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_unbounded(const json& j, std::string_view key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::numeric_limits<double>::infinity();
  if (!it->is_number()) throw ValidationError(fmt::format("{}: expected a number", key));
  return it->get<double>();
}

std::string cell(double v) { return format_double(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

}  // namespace

void to_json(json& j, const GateDecision& d) {
  j = json{{"verdict", to_string(d.verdict)}, {"score", d.score}, {"token_scores", d.token_scores}};
  if (d.k_clamped) j["k_clamped"] = true;
  if (d.empty_answer) j["empty_answer"] = true;
}

void from_json(const json& j, GateDecision& d) {
  detail::reject_unknown(j, {"verdict", "score", "token_scores", "k_clamped", "empty_answer"});
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict == "accept") {
    d.verdict = Verdict::Accept;
  } else if (verdict == "fallback") {
    d.verdict = Verdict::Fallback;
  } else {
    throw ValidationError(fmt::format("verdict: unknown value '{}'", verdict));
  }
  d.score = j.at("score").get<double>();
  d.token_scores = j.at("token_scores").get<std::vector<double>>();
  d.k_clamped = j.value("k_clamped", false);
  d.empty_answer = j.value("empty_answer", false);
}

void to_json(json& j, const QueryOutcome& o) {
  j = json{{"query_id", o.query_id},
           {"answer", o.answer},
           {"path", to_string(o.path)},
           {"latency", {{"judge_s", o.latency.judge_s},
                        {"speculate_s", o.latency.speculate_s},
                        {"agentic_s", o.latency.agentic_s}}},
           {"total_latency_s", o.total_latency_s}};
  if (o.gate) j["gate"] = *o.gate;
  if (o.correct) j["correct"] = *o.correct;
  if (o.agentic_depth) j["agentic_depth"] = *o.agentic_depth;
  if (o.truncated) j["truncated"] = true;
  if (o.failed) j["failed"] = true;
  if (!o.diagnostic.empty()) j["diagnostic"] = o.diagnostic;
}

void from_json(const json& j, QueryOutcome& o) {
  o = QueryOutcome{};
  o.query_id = j.at("query_id").get<std::string>();
  o.answer = j.at("answer").get<std::string>();
  o.path = parse_path(j.at("path").get<std::string>());
  const auto& lat = j.at("latency");
  o.latency.judge_s = lat.at("judge_s").get<double>();
  o.latency.speculate_s = lat.at("speculate_s").get<double>();
  o.latency.agentic_s = lat.at("agentic_s").get<double>();
  o.total_latency_s = j.at("total_latency_s").get<double>();
  if (j.contains("gate")) o.gate = j.at("gate").get<GateDecision>();
  if (j.contains("correct")) o.correct = j.at("correct").get<bool>();
  if (j.contains("agentic_depth")) o.agentic_depth = j.at("agentic_depth").get<int>();
  o.truncated = j.value("truncated", false);
  o.failed = j.value("failed", false);
  o.diagnostic = j.value("diagnostic", std::string{});
}

void to_json(json& j, const FunnelStats& s) {
  j = json{{"batch_size", s.batch_size},
           {"n_toolfree", s.n_toolfree},
           {"n_toolreq", s.n_toolreq},
           {"n_accepted", s.n_accepted},
           {"n_rejected", s.n_rejected},
           {"n_residual", s.n_residual},
           {"beta_hat", s.beta_hat},
           {"alpha_hat", s.alpha_hat},
           {"frontend_makespan_s", s.frontend_makespan_s},
           {"fallback_makespan_s", s.fallback_makespan_s},
           {"batch_makespan_s", s.batch_makespan_s},
           {"throughput_qps", finite_or_null(s.throughput_qps)},
           {"baseline_makespan_s", s.baseline_makespan_s},
           {"speedup", finite_or_null(s.speedup)},
           {"frontend_workers", s.frontend_workers},
           {"agentic_workers", s.agentic_workers},
           {"mode", to_string(s.mode)},
           {"bypass", s.bypass}};
}

void from_json(const json& j, FunnelStats& s) {
  s = FunnelStats{};
  s.batch_size = j.at("batch_size").get<int>();
  s.n_toolfree = j.at("n_toolfree").get<int>();
  s.n_toolreq = j.at("n_toolreq").get<int>();
  s.n_accepted = j.at("n_accepted").get<int>();
  s.n_rejected = j.at("n_rejected").get<int>();
  s.n_residual = j.at("n_residual").get<int>();
  s.beta_hat = j.at("beta_hat").get<double>();
  s.alpha_hat = j.at("alpha_hat").get<double>();
  s.frontend_makespan_s = j.at("frontend_makespan_s").get<double>();
  s.fallback_makespan_s = j.at("fallback_makespan_s").get<double>();
  s.batch_makespan_s = j.at("batch_makespan_s").get<double>();
  s.throughput_qps = read_unbounded(j, "throughput_qps");
  s.baseline_makespan_s = j.at("baseline_makespan_s").get<double>();
  s.speedup = read_unbounded(j, "speedup");
  s.frontend_workers = j.at("frontend_workers").get<int>();
  s.agentic_workers = j.at("agentic_workers").get<int>();
  s.mode = parse_clock_mode(j.at("mode").get<std::string>());
  s.bypass = j.at("bypass").get<bool>();
}

void to_json(json& j, const Query& q) {
  j = json{{"id", q.id}, {"image_ref", q.image_ref}, {"question", q.question}};
  if (q.ground_truth) j["ground_truth"] = *q.ground_truth;
  if (q.true_requires_tools) j["true_requires_tools"] = *q.true_requires_tools;
  if (q.true_depth) j["true_depth"] = *q.true_depth;
  if (q.draft_correct) j["draft_correct"] = *q.draft_correct;
}

void from_json(const json& j, Query& q) {
  detail::reject_unknown(j, {"id", "image_ref", "question", "ground_truth", "true_requires_tools",
                             "true_depth", "draft_correct"});
  q = Query{};
  q.id = j.at("id").get<std::string>();
  q.image_ref = j.value("image_ref", std::string{});
  q.question = j.value("question", std::string{});
  if (j.contains("ground_truth")) q.ground_truth = j.at("ground_truth").get<std::string>();
  if (j.contains("true_requires_tools")) q.true_requires_tools = j.at("true_requires_tools").get<bool>();
  if (j.contains("true_depth")) q.true_depth = j.at("true_depth").get<int>();
  if (j.contains("draft_correct")) q.draft_correct = j.at("draft_correct").get<bool>();
  q.validate();
}

void to_json(json& j, const LogitDump& d) {
  json tokens = json::array();
  for (const auto& t : d.tokens) tokens.push_back(std::vector<double>(t.values().begin(), t.values().end()));
  j = json{{"query_id", d.query_id}, {"answer", d.answer}, {"correct", d.correct}, {"tokens", std::move(tokens)}};
}

void from_json(const json& j, LogitDump& d) {
  d = LogitDump{};
  d.query_id = j.at("query_id").get<std::string>();
  d.answer = j.at("answer").get<std::string>();
  d.correct = j.value("correct", false);
  for (const auto& t : j.at("tokens")) d.tokens.push_back(TokenLogits::from_sorted(t.get<std::vector<double>>()));
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  std::vector<json> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

namespace csv {

std::string row(std::span<const std::string> cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      out += c;
      continue;
    }
    out += '"';
    for (char ch : c) {
      if (ch == '"') out += '"';
      out += ch;
    }
    out += '"';
  }
  out += '\n';
  return out;
}

void write_summary(std::ostream& out, const Summary& s) {
  out << kSummaryHeader << '\n';
  const std::vector<std::string> cells{
      s.mode, cell(s.batches), cell(s.queries), cell(s.accuracy), cell(s.beta_hat),
      cell(s.alpha_hat), cell(s.batch_makespan_s), cell(s.baseline_makespan_s), cell(s.throughput_qps),
      cell(s.measured_speedup), cell(s.analytic_speedup), cell(s.mean_latency_s), cell(s.expected_latency_s)};
  out << row(cells);
}

void write_scores(std::ostream& out, std::span<const ScoreSample> samples) {
  out << kScoresHeader << '\n';
  for (const auto& s : samples) {
    const std::vector<std::string> cells{s.query_id, std::string(to_string(s.strategy)), cell(s.score),
                                         cell(s.correct)};
    out << row(cells);
  }
}

void write_operating_points(std::ostream& out, std::span<const OperatingPoint> points) {
  out << kOperatingPointsHeader << '\n';
  for (const auto& p : points) {
    const std::vector<std::string> cells{cell(p.tau), cell(p.acceptance_rate), cell(p.accuracy),
                                         cell(p.analytic_speedup), cell(p.expected_latency_s),
                                         p.simulated_speedup ? cell(*p.simulated_speedup) : std::string{}};
    out << row(cells);
  }
}

void write_kde(std::ostream& out, const KdeCurve& curve) {
  out << kKdeHeader << '\n';
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    const std::vector<std::string> cells{cell(curve.grid[i]), cell(curve.density[i])};
    out << row(cells);
  }
}

}  // namespace csv

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw ValidationError(fmt::format("write failed: {}", path.string()));
}

}  // namespace specfunnel
