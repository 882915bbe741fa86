#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "app/config.hpp"
#include "specfunnel/funnel.hpp"
#include "specfunnel/records.hpp"

namespace specfunnel::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitDegenerate = 4;

/// Runs fn and maps library exceptions onto exit codes, printing the
/// message to err.
int guarded(const std::function<int()>& fn, std::ostream& err);

enum class Axis { Threshold, BatchSize, TopK };
Axis parse_axis(std::string_view s);
std::string_view to_string(Axis a) noexcept;

/// Synthetic workload, or the queries file when workload.queries_path is set.
std::vector<Query> build_workload(const AppConfig& config);
std::unique_ptr<Backend> make_backend(const AppConfig& config);

/// Splits the workload into schedule.batch_size batches and serves each.
/// bypass=false runs the agentic-only baseline instead.
std::vector<BatchResult> execute_run(std::span<const Query> queries, const AppConfig& config, Backend& backend,
                                     bool bypass);

/// Totals over a run's batches.
csv::Summary summarize(const std::vector<BatchResult>& batches);

struct RunManifest {
  std::string run_id;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string command;
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  nlohmann::json batches = nlohmann::json::array();
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& m);

/// ISO-8601 UTC with millisecond precision.
std::string iso8601(double seconds_since_epoch);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool bypass = true;
  std::optional<std::filesystem::path> calibration;
};

int cmd_run(const AppConfig& config, const RunOptions& options, std::ostream& log);
int cmd_calibrate(const AppConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_ablate(const AppConfig& config, Axis axis, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_report(const std::filesystem::path& out_dir, std::ostream& out);
int cmd_replay(const AppConfig& config, const std::filesystem::path& log_path, const RunOptions& options,
               std::ostream& log);

}  // namespace specfunnel::app
