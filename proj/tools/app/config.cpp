// SPDX-License-Identifier: Apache-2.0

#include "app/config.hpp"

#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "specfunnel/error.hpp"

namespace specfunnel::app {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::string_view section, std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw ValidationError(fmt::format("{}: expected a JSON object", section));
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) throw ValidationError(fmt::format("{}.{}: unknown field", section, key));
  }
}

template <class T>
void read(const json& j, std::string_view section, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}.{}: {}", section, key, e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}.{}: {}", section, key, e.what()));
  }
}

template <class T>
void read_optional(const json& j, std::string_view section, std::string_view key, std::optional<T>& out) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    out.reset();
    return;
  }
  T value{};
  read(j, section, key, value);
  out = value;
}

json optional_json(const auto& opt) { return opt ? json(*opt) : json(nullptr); }

std::string_view kind_name(BackendSection::Kind k) {
  return k == BackendSection::Kind::Synthetic ? "synthetic" : "remote";
}

BackendSection::Kind parse_kind(std::string_view s) {
  if (s == "synthetic") return BackendSection::Kind::Synthetic;
  if (s == "remote") return BackendSection::Kind::Remote;
  throw ValidationError(fmt::format("backend.kind: unknown value '{}' (synthetic|remote)", s));
}

// Dotted path to JSON pointer; "gate.tau" -> "/gate/tau".
json::json_pointer pointer_for(std::string_view path) {
  std::string ptr;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto part = path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (part.empty()) throw ValidationError(fmt::format("--set: malformed path '{}'", path));
    ptr += '/';
    for (char c : part) {
      if (c == '~') {
        ptr += "~0";
      } else if (c == '/') {
        ptr += "~1";
      } else {
        ptr += c;
      }
    }
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(ptr);
}

}  // namespace

ScheduleConfig ScheduleSection::for_batch(std::size_t batch) const {
  ScheduleConfig s;
  s.frontend_workers = frontend_workers ? *frontend_workers : static_cast<int>(std::max<std::size_t>(batch, 1));
  s.agentic_workers = agentic_workers;
  s.mode = mode;
  return s;
}

void AppConfig::validate() const {
  if (workload.size == 0 && workload.queries_path.empty()) throw ValidationError("workload.size must be >= 1");
  if (workload.quota) {
    if (!(workload.quota->beta >= 0.0 && workload.quota->beta <= 1.0)) {
      throw ValidationError("workload.quota.beta must lie in [0,1]");
    }
    if (!(workload.quota->alpha >= 0.0 && workload.quota->alpha <= 1.0)) {
      throw ValidationError("workload.quota.alpha must lie in [0,1]");
    }
    if (synthetic.judge_accuracy != 1.0) {
      throw ValidationError("workload.quota requires synthetic.judge_accuracy == 1");
    }
  }
  synthetic.validate();
  gate.validate();
  if (schedule.batch_size && *schedule.batch_size < 1) throw ValidationError("schedule.batch_size must be >= 1");
  if (schedule.frontend_workers && *schedule.frontend_workers < 1) {
    throw ValidationError("schedule.frontend_workers must be >= 1");
  }
  if (schedule.agentic_workers < 1) throw ValidationError("schedule.agentic_workers must be >= 1");
  backend.remote.validate();
  if (calibration.num_taus < 1) throw ValidationError("calibration.num_taus must be >= 1");
  if (calibration.union_bound_bins < 1) throw ValidationError("calibration.union_bound_bins must be >= 1");
  if (calibration.baseline_accuracy &&
      !(*calibration.baseline_accuracy >= 0.0 && *calibration.baseline_accuracy <= 1.0)) {
    throw ValidationError("calibration.baseline_accuracy must lie in [0,1]");
  }
  for (double t : ablation.thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw ValidationError("ablation.thresholds entries must lie in (0,1)");
  }
  for (int b : ablation.batch_sizes) {
    if (b < 1) throw ValidationError("ablation.batch_sizes entries must be >= 1");
  }
  if (ablation.batch_workload_size < 1) throw ValidationError("ablation.batch_workload_size must be >= 1");
  for (int k : ablation.top_k) {
    if (k < 2) throw ValidationError("ablation.top_k entries must be >= 2");
  }
  if (ablation.top_k_vocab < 2) throw ValidationError("ablation.top_k_vocab must be >= 2");
}

json to_json(const AppConfig& c) {
  json synthetic = c.synthetic;
  synthetic.erase("seed");
  json quota = nullptr;
  if (c.workload.quota) quota = json{{"beta", c.workload.quota->beta}, {"alpha", c.workload.quota->alpha}};
  return json{
      {"seed", c.seed},
      {"workload", {{"size", c.workload.size}, {"quota", quota}, {"queries_path", c.workload.queries_path}}},
      {"synthetic", synthetic},
      {"gate",
       {{"k", c.gate.k},
        {"epsilon", c.gate.epsilon},
        {"strategy", to_string(c.gate.strategy)},
        {"bottom_ratio", c.gate.bottom_ratio},
        {"tau", c.gate.tau}}},
      {"schedule",
       {{"batch_size", optional_json(c.schedule.batch_size)},
        {"frontend_workers", optional_json(c.schedule.frontend_workers)},
        {"agentic_workers", c.schedule.agentic_workers},
        {"mode", to_string(c.schedule.mode)}}},
      {"backend",
       {{"kind", kind_name(c.backend.kind)},
        {"endpoint", c.backend.remote.endpoint},
        {"timeout_s", c.backend.remote.timeout_s},
        {"max_in_flight", c.backend.remote.max_in_flight},
        {"judge_prompt", c.backend.remote.judge_prompt},
        {"top_logprobs", c.backend.remote.top_logprobs},
        {"max_steps", c.backend.remote.max_steps},
        {"log_path", c.backend.log_path}}},
      {"calibration",
       {{"num_taus", c.calibration.num_taus},
        {"baseline_accuracy", optional_json(c.calibration.baseline_accuracy)},
        {"union_bound_bins", c.calibration.union_bound_bins}}},
      {"ablation",
       {{"thresholds", c.ablation.thresholds},
        {"batch_sizes", c.ablation.batch_sizes},
        {"batch_workload_size", c.ablation.batch_workload_size},
        {"top_k", c.ablation.top_k},
        {"top_k_vocab", c.ablation.top_k_vocab}}},
  };
}

AppConfig from_json(const json& j) {
  AppConfig c;
  reject_unknown(j, "config",
                 {"seed", "workload", "synthetic", "gate", "schedule", "backend", "calibration", "ablation"});
  if (j.contains("seed") && !j.at("seed").is_null()) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }

  if (const auto w = j.value("workload", json::object()); !w.is_null()) {
    reject_unknown(w, "workload", {"size", "quota", "queries_path"});
    read(w, "workload", "size", c.workload.size);
    read(w, "workload", "queries_path", c.workload.queries_path);
    if (w.contains("quota") && !w.at("quota").is_null()) {
      const auto& q = w.at("quota");
      reject_unknown(q, "workload.quota", {"beta", "alpha"});
      QuotaSpec spec;
      read(q, "workload.quota", "beta", spec.beta);
      read(q, "workload.quota", "alpha", spec.alpha);
      c.workload.quota = spec;
    }
  }

  if (const auto s = j.value("synthetic", json::object()); !s.is_null()) {
    if (s.is_object() && s.contains("seed")) {
      throw ValidationError("synthetic.seed: set the top-level seed instead");
    }
    try {
      c.synthetic = s.get<SyntheticConfig>();
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("synthetic.{}", e.what()));
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("synthetic: {}", e.what()));
    }
  }
  c.synthetic.seed = c.seed;

  if (const auto g = j.value("gate", json::object()); !g.is_null()) {
    reject_unknown(g, "gate", {"k", "epsilon", "strategy", "bottom_ratio", "tau"});
    read(g, "gate", "k", c.gate.k);
    read(g, "gate", "epsilon", c.gate.epsilon);
    read(g, "gate", "bottom_ratio", c.gate.bottom_ratio);
    read(g, "gate", "tau", c.gate.tau);
    std::string strategy(to_string(c.gate.strategy));
    read(g, "gate", "strategy", strategy);
    try {
      c.gate.strategy = parse_strategy(strategy);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("gate.strategy: {}", e.what()));
    }
  }

  if (const auto s = j.value("schedule", json::object()); !s.is_null()) {
    reject_unknown(s, "schedule", {"batch_size", "frontend_workers", "agentic_workers", "mode"});
    read_optional(s, "schedule", "batch_size", c.schedule.batch_size);
    read_optional(s, "schedule", "frontend_workers", c.schedule.frontend_workers);
    read(s, "schedule", "agentic_workers", c.schedule.agentic_workers);
    std::string mode(to_string(c.schedule.mode));
    read(s, "schedule", "mode", mode);
    try {
      c.schedule.mode = parse_clock_mode(mode);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("schedule.mode: {}", e.what()));
    }
  }

  if (const auto b = j.value("backend", json::object()); !b.is_null()) {
    reject_unknown(b, "backend",
                   {"kind", "endpoint", "timeout_s", "max_in_flight", "judge_prompt", "top_logprobs", "max_steps",
                    "log_path"});
    std::string kind(kind_name(c.backend.kind));
    read(b, "backend", "kind", kind);
    c.backend.kind = parse_kind(kind);
    read(b, "backend", "endpoint", c.backend.remote.endpoint);
    read(b, "backend", "timeout_s", c.backend.remote.timeout_s);
    read(b, "backend", "max_in_flight", c.backend.remote.max_in_flight);
    read(b, "backend", "judge_prompt", c.backend.remote.judge_prompt);
    read(b, "backend", "top_logprobs", c.backend.remote.top_logprobs);
    read(b, "backend", "max_steps", c.backend.remote.max_steps);
    read(b, "backend", "log_path", c.backend.log_path);
  }

  if (const auto k = j.value("calibration", json::object()); !k.is_null()) {
    reject_unknown(k, "calibration", {"num_taus", "baseline_accuracy", "union_bound_bins"});
    read(k, "calibration", "num_taus", c.calibration.num_taus);
    read_optional(k, "calibration", "baseline_accuracy", c.calibration.baseline_accuracy);
    read(k, "calibration", "union_bound_bins", c.calibration.union_bound_bins);
  }

  if (const auto a = j.value("ablation", json::object()); !a.is_null()) {
    reject_unknown(a, "ablation", {"thresholds", "batch_sizes", "batch_workload_size", "top_k", "top_k_vocab"});
    read(a, "ablation", "thresholds", c.ablation.thresholds);
    read(a, "ablation", "batch_sizes", c.ablation.batch_sizes);
    read(a, "ablation", "batch_workload_size", c.ablation.batch_workload_size);
    read(a, "ablation", "top_k", c.ablation.top_k);
    read(a, "ablation", "top_k_vocab", c.ablation.top_k_vocab);
  }

  c.validate();
  return c;
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError(fmt::format("--set expects path=value, got '{}'", assignment));
  }
  const auto path = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  tree[pointer_for(path)] = std::move(value);
}

AppConfig load_config(const LoadOptions& options) {
  json tree = to_json(AppConfig{});
  if (options.config_path) {
    std::ifstream in(*options.config_path);
    if (!in) throw ValidationError(fmt::format("cannot open config '{}'", options.config_path->string()));
    json file;
    try {
      file = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}: {}", options.config_path->string(), e.what()));
    }
    if (!file.is_object()) throw ValidationError("config: expected a JSON object at top level");
    // Shallow per-section merge keeps unknown-key detection on the file's own keys.
    for (const auto& [key, value] : file.items()) {
      if (value.is_object() && tree.contains(key) && tree[key].is_object()) {
        for (const auto& [inner, v] : value.items()) tree[key][inner] = v;
      } else {
        tree[key] = value;
      }
    }
  }
  for (const auto& o : options.overrides) apply_override(tree, o);
  if (options.seed) tree["seed"] = *options.seed;
  if (options.endpoint) tree["backend"]["endpoint"] = *options.endpoint;

  auto config = from_json(tree);
  if (config.backend.kind == BackendSection::Kind::Remote) {
    config.backend.remote.endpoint = resolve_endpoint(config.backend.remote.endpoint);
  }
  return config;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string config_digest(const AppConfig& config) { return sha256_hex(to_json(config).dump()); }

}  // namespace specfunnel::app
