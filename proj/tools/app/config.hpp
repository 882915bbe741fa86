#pragma once

// SPDX-License-Identifier: Apache-2.0

// Resolved experiment configuration: defaults, then the config file,
// then --set overrides and dedicated flags. Every field has a JSON path;
// validation errors name it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specfunnel/funnel.hpp"
#include "specfunnel/remote_backend.hpp"
#include "specfunnel/sep_gate.hpp"
#include "specfunnel/synthetic_backend.hpp"

namespace specfunnel::app {

struct WorkloadSection {
  std::size_t size = 1000;
  std::optional<QuotaSpec> quota;
  /// JSONL file of queries; replaces the synthetic generator when set.
  std::string queries_path;
};

struct ScheduleSection {
  /// Queries per batch; unset means the whole workload is one batch.
  std::optional<int> batch_size;
  /// Unset means one front-end worker per query in the batch.
  std::optional<int> frontend_workers;
  int agentic_workers = 1;
  ClockMode mode = ClockMode::Simulated;

  ScheduleConfig for_batch(std::size_t batch) const;
};

struct BackendSection {
  enum class Kind { Synthetic, Remote };
  Kind kind = Kind::Synthetic;
  RemoteConfig remote;
  /// Exchange log for the remote backend ("" disables logging).
  std::string log_path;
};

struct CalibrationSection {
  std::size_t num_taus = 33;
  /// Accuracy the chosen threshold must keep; unset means measured agentic-only accuracy.
  std::optional<double> baseline_accuracy;
  std::size_t union_bound_bins = 10;
};

struct AblationSection {
  std::vector<double> thresholds{0.90, 0.92, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99};
  std::vector<int> batch_sizes{1, 8, 64, 256, 1024};
  /// Workload size for the batch_size axis.
  std::size_t batch_workload_size = 2048;
  std::vector<int> top_k{8, 16, 32, 64, 128};
  /// synthetic.vocab_k used on the top_k axis, so every K has enough logits.
  int top_k_vocab = 128;
};

struct AppConfig {
  std::uint64_t seed = 7;
  WorkloadSection workload;
  SyntheticConfig synthetic;
  GateConfig gate;
  ScheduleSection schedule;
  BackendSection backend;
  CalibrationSection calibration;
  AblationSection ablation;

  /// Throws ValidationError with the field path of the first problem.
  void validate() const;
};

nlohmann::json to_json(const AppConfig& config);
/// Strict: unknown keys are rejected. Missing keys keep defaults.
AppConfig from_json(const nlohmann::json& j);

/// Applies one "a.b.c=value" override. The value is parsed as JSON when
/// possible, otherwise taken as a string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

struct LoadOptions {
  std::optional<std::filesystem::path> config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> endpoint;
};

/// Defaults < file < overrides < flags. Throws ValidationError.
AppConfig load_config(const LoadOptions& options);

/// Hex SHA-256 of the canonical (sorted-key, compact) resolved config.
std::string config_digest(const AppConfig& config);

std::string sha256_hex(std::string_view data);

}  // namespace specfunnel::app
