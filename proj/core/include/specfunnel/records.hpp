#pragma once

// SPDX-License-Identifier: Apache-2.0

// On-disk formats: line-delimited JSON for per-query records and logit
// dumps, one JSON object per batch for stats, CSV for tables and curves.
// CSV files are UTF-8 with a header row and '\n' line endings. Doubles
// are printed in shortest round-trip form so files are byte-stable.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "specfunnel/calibration.hpp"
#include "specfunnel/funnel.hpp"
#include "specfunnel/pipeline.hpp"

namespace specfunnel {

void to_json(nlohmann::json& j, const GateDecision& d);
void from_json(const nlohmann::json& j, GateDecision& d);
void to_json(nlohmann::json& j, const QueryOutcome& o);
void from_json(const nlohmann::json& j, QueryOutcome& o);
void to_json(nlohmann::json& j, const FunnelStats& s);
void from_json(const nlohmann::json& j, FunnelStats& s);
void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);

/// One speculative answer's logits, as stored in a dump file.
struct LogitDump {
  std::string query_id;
  std::string answer;
  std::vector<TokenLogits> tokens;
  bool correct = false;

  friend bool operator==(const LogitDump&, const LogitDump&) = default;
};

void to_json(nlohmann::json& j, const LogitDump& d);
void from_json(const nlohmann::json& j, LogitDump& d);

/// Reads every non-blank line of a JSONL file. Throws ValidationError
/// with the line number on a parse error.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

template <class T>
std::vector<T> read_records(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.template get<T>());
  return out;
}

template <class T>
void write_jsonl(std::ostream& out, std::span<const T> records) {
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

/// Shortest decimal that round-trips; "inf", "-inf", "nan" for non-finite.
std::string format_double(double v);

namespace csv {

inline constexpr std::string_view kSummaryHeader =
    "mode,batches,queries,accuracy,beta_hat,alpha_hat,batch_makespan_s,baseline_makespan_s,"
    "throughput_qps,measured_speedup,analytic_speedup,mean_latency_s,expected_latency_s";
inline constexpr std::string_view kScoresHeader = "query_id,strategy,score,correct";
inline constexpr std::string_view kOperatingPointsHeader =
    "tau,acceptance_rate,accuracy,analytic_speedup,expected_latency_s,simulated_speedup";
inline constexpr std::string_view kKdeHeader = "grid_point,density";
inline constexpr std::string_view kThresholdAblationHeader =
    "tau,acceptance_rate,accuracy,simulated_speedup,analytic_speedup";
inline constexpr std::string_view kBatchSizeAblationHeader =
    "batch_size,accuracy,acceptance_rate,simulated_speedup,analytic_speedup";
inline constexpr std::string_view kTopKAblationHeader =
    "k,acceptance_rate,accuracy,simulated_speedup,analytic_speedup";

/// Cells joined with ',' plus '\n'. Cells containing ',', '"' or a
/// newline are quoted.
std::string row(std::span<const std::string> cells);

/// Totals over every batch of a run.
struct Summary {
  std::string mode;
  int batches = 0;
  int queries = 0;
  double accuracy = 0.0;
  double beta_hat = 0.0;
  double alpha_hat = 0.0;
  double batch_makespan_s = 0.0;
  double baseline_makespan_s = 0.0;
  double throughput_qps = 0.0;
  double measured_speedup = 0.0;
  double analytic_speedup = 0.0;
  double mean_latency_s = 0.0;
  double expected_latency_s = 0.0;
};

void write_summary(std::ostream& out, const Summary& s);
void write_scores(std::ostream& out, std::span<const ScoreSample> samples);
void write_operating_points(std::ostream& out, std::span<const OperatingPoint> points);
void write_kde(std::ostream& out, const KdeCurve& curve);

}  // namespace csv

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace specfunnel
