#pragma once

// SPDX-License-Identifier: Apache-2.0

// HTTP adapter for real generation servers, plus the exchange log and
// the replay backend built on it.
//
// Wire protocol (JSON over POST):
//   /judge     {id, image_ref, question, prompt}        -> {g, latency_s}
//   /speculate {id, image_ref, question, top_logprobs}  -> {answer, tokens:[{text, top_logprobs:[{token, logprob}]}], latency_s}
//   /agentic   {id, image_ref, question, max_steps}     -> {answer, depth, step_costs:[[llm_s, tool_s]], latency_s}

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "specfunnel/backend.hpp"

namespace specfunnel {

inline constexpr const char* kDefaultJudgePrompt =
    "Answer 0 if the question is answerable from the full image without tools, else 1.";

/// Environment variable consulted when no endpoint is configured.
inline constexpr const char* kEndpointEnvVar = "SPEC_FUNNEL_ENDPOINT";

struct RemoteConfig {
  /// Base URL, e.g. "http://127.0.0.1:8000" or "http://host:8000/api".
  std::string endpoint;
  double timeout_s = 30.0;
  int max_in_flight = 8;
  std::string judge_prompt = kDefaultJudgePrompt;
  int top_logprobs = 64;
  int max_steps = 5;

  void validate() const;
};

/// Append-only line-delimited JSON log of request/response pairs.
/// Each line: {"route": ..., "request": {...}, "response": {...}}.
class ExchangeLog {
 public:
  explicit ExchangeLog(const std::filesystem::path& path);

  void append(const std::string& route, const nlohmann::json& request, const nlohmann::json& response);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct GenerationRequest {
  std::string id;
  std::string image_ref;
  std::string question;
  int max_top_logprobs = 64;
};

struct GenerationResponse {
  std::string answer;
  std::vector<std::string> token_text;
  std::vector<TokenLogits> token_logits;
  double latency_s = 0.0;
};

/// POSTs to {endpoint}/speculate and decodes per-token logprobs.
/// Throws BackendUnavailable on timeout, transport error, malformed JSON
/// or missing logprobs.
GenerationResponse remote_generate(const std::string& endpoint, const GenerationRequest& request,
                                   double timeout_s = 30.0, ExchangeLog* log = nullptr);

/// Response decoders, shared by the live and replay backends.
JudgeOutput parse_judge_response(const nlohmann::json& response);
GenerationResponse parse_generation_response(const nlohmann::json& response, int max_top_logprobs);
AgenticOutput parse_agentic_response(const nlohmann::json& response, int max_steps);

/// POST helper. Throws BackendUnavailable.
nlohmann::json post_json(const std::string& endpoint, const std::string& route,
                         const nlohmann::json& body, double timeout_s);

class RemoteBackend final : public Backend {
 public:
  /// An empty endpoint falls back to $SPEC_FUNNEL_ENDPOINT.
  explicit RemoteBackend(RemoteConfig config, std::optional<std::filesystem::path> log_path = {});

  JudgeOutput judge(const Query& query) override;
  SpeculativeAnswer speculate(const Query& query) override;
  AgenticOutput agentic_run(const Query& query) override;

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  nlohmann::json call(const std::string& route, const nlohmann::json& body);

  RemoteConfig config_;
  std::unique_ptr<ExchangeLog> log_;
  std::counting_semaphore<> in_flight_;
};

/// Serves responses recorded in an exchange log, keyed by (route, id).
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& log_path, int max_top_logprobs = 64,
                         int max_steps = 5);

  JudgeOutput judge(const Query& query) override;
  SpeculativeAnswer speculate(const Query& query) override;
  AgenticOutput agentic_run(const Query& query) override;

  /// Queries reconstructed from the logged requests, in first-seen order.
  const std::vector<Query>& queries() const noexcept { return queries_; }

 private:
  const nlohmann::json& lookup(const std::string& route, const std::string& id) const;

  std::map<std::pair<std::string, std::string>, nlohmann::json> responses_;
  std::vector<Query> queries_;
  int max_top_logprobs_;
  int max_steps_;
};

/// Endpoint from the argument, else the environment, else empty.
std::string resolve_endpoint(const std::string& configured);

}  // namespace specfunnel
