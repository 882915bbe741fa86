// SPDX-License-Identifier: Apache-2.0

#include "specfunnel/remote_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <regex>

#include <fmt/format.h>
#include <httplib.h>

#include "specfunnel/error.hpp"

namespace specfunnel {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl split_endpoint(const std::string& endpoint) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, re)) {
    throw BackendUnavailable(fmt::format("invalid endpoint URL '{}'", endpoint));
  }
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

json request_body(const Query& q) {
  return json{{"id", q.id}, {"image_ref", q.image_ref}, {"question", q.question}};
}

template <class Fn>
auto decode(const char* route, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const BackendUnavailable&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendUnavailable(fmt::format("{}: malformed response: {}", route, e.what()));
  }
}

}  // namespace

void RemoteConfig::validate() const {
  if (!(timeout_s > 0.0)) throw ValidationError("backend.timeout_s must be > 0");
  if (max_in_flight < 1) throw ValidationError("backend.max_in_flight must be >= 1");
  if (top_logprobs < 1) throw ValidationError("backend.top_logprobs must be >= 1");
  if (max_steps < 0) throw ValidationError("backend.max_steps must be >= 0");
}

ExchangeLog::ExchangeLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw ValidationError(fmt::format("cannot open exchange log '{}'", path.string()));
}

void ExchangeLog::append(const std::string& route, const json& request, const json& response) {
  const json line{{"route", route}, {"request", request}, {"response", response}};
  std::lock_guard lock(mutex_);
  out_ << line.dump() << '\n';
  out_.flush();
}

std::string resolve_endpoint(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kEndpointEnvVar)) return env;
  return {};
}

json post_json(const std::string& endpoint, const std::string& route, const json& body,
               double timeout_s) {
  if (endpoint.empty()) {
    throw BackendUnavailable(fmt::format("no endpoint configured (set --endpoint or {})", kEndpointEnvVar));
  }
  const auto url = split_endpoint(endpoint);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  auto res = client.Post(url.prefix + route, body.dump(), "application/json");
  if (!res) {
    throw BackendUnavailable(
        fmt::format("{}{}: {}", endpoint, route, httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw BackendUnavailable(fmt::format("{}{}: HTTP {}", endpoint, route, res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendUnavailable(fmt::format("{}: malformed response: {}", route, e.what()));
  }
}

JudgeOutput parse_judge_response(const json& response) {
  return decode("/judge", [&] {
    JudgeOutput out;
    const auto& g = response.at("g");
    out.g = g.is_boolean() ? (g.get<bool>() ? 1 : 0) : g.get<int>();
    if (out.g != 0 && out.g != 1) throw BackendUnavailable("/judge: g must be 0 or 1");
    out.latency_s = response.value("latency_s", 0.0);
    if (!(out.latency_s >= 0.0)) throw BackendUnavailable("/judge: negative latency");
    return out;
  });
}

GenerationResponse parse_generation_response(const json& response, int max_top_logprobs) {
  return decode("/speculate", [&] {
    GenerationResponse out;
    out.answer = response.at("answer").get<std::string>();
    out.latency_s = response.value("latency_s", 0.0);
    if (!(out.latency_s >= 0.0)) throw BackendUnavailable("/speculate: negative latency");
    const auto tokens = response.find("tokens");
    if (tokens == response.end() || !tokens->is_array()) {
      throw BackendUnavailable("missing logprobs");
    }
    for (const auto& token : *tokens) {
      const auto top = token.find("top_logprobs");
      if (top == token.end() || !top->is_array() || top->empty()) {
        throw BackendUnavailable("missing logprobs");
      }
      std::vector<double> values;
      values.reserve(top->size());
      for (const auto& entry : *top) {
        const auto& lp = entry.at("logprob");
        if (lp.is_number()) values.push_back(lp.get<double>());
      }
      if (values.empty()) throw BackendUnavailable("missing logprobs");
      std::sort(values.begin(), values.end(), std::greater<>());
      if (values.size() > static_cast<std::size_t>(max_top_logprobs)) {
        values.resize(static_cast<std::size_t>(max_top_logprobs));
      }
      out.token_text.push_back(token.value("text", std::string{}));
      out.token_logits.push_back(TokenLogits::from_sorted(std::move(values)));
    }
    if (!out.answer.empty() && out.token_logits.empty()) throw BackendUnavailable("missing logprobs");
    return out;
  });
}

AgenticOutput parse_agentic_response(const json& response, int max_steps) {
  return decode("/agentic", [&] {
    AgenticOutput out;
    out.answer = response.at("answer").get<std::string>();
    out.depth = response.at("depth").get<int>();
    if (out.depth < 0 || out.depth > max_steps) {
      throw BackendUnavailable(fmt::format("/agentic: depth {} outside [0, {}]", out.depth, max_steps));
    }
    for (const auto& pair : response.at("step_costs")) {
      const StepCost step{pair.at(0).get<double>(), pair.at(1).get<double>()};
      if (!(step.llm_s >= 0.0) || !(step.tool_s >= 0.0)) {
        throw BackendUnavailable("/agentic: negative step cost");
      }
      out.step_costs.push_back(step);
    }
    out.truncated = response.value("truncated", false);
    out.latency_s = total_step_cost(out.step_costs);
    return out;
  });
}

GenerationResponse remote_generate(const std::string& endpoint, const GenerationRequest& request,
                                   double timeout_s, ExchangeLog* log) {
  const json body{{"id", request.id},
                  {"image_ref", request.image_ref},
                  {"question", request.question},
                  {"top_logprobs", request.max_top_logprobs}};
  const auto response = post_json(endpoint, "/speculate", body, timeout_s);
  if (log) log->append("/speculate", body, response);
  return parse_generation_response(response, request.max_top_logprobs);
}

RemoteBackend::RemoteBackend(RemoteConfig config, std::optional<std::filesystem::path> log_path)
    : config_(std::move(config)), in_flight_(std::max(config_.max_in_flight, 1)) {
  config_.validate();
  config_.endpoint = resolve_endpoint(config_.endpoint);
  if (log_path) log_ = std::make_unique<ExchangeLog>(*log_path);
}

json RemoteBackend::call(const std::string& route, const json& body) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};
  auto response = post_json(config_.endpoint, route, body, config_.timeout_s);
  if (log_) log_->append(route, body, response);
  return response;
}

JudgeOutput RemoteBackend::judge(const Query& query) {
  auto body = request_body(query);
  body["prompt"] = config_.judge_prompt;
  return parse_judge_response(call("/judge", body));
}

SpeculativeAnswer RemoteBackend::speculate(const Query& query) {
  auto body = request_body(query);
  body["top_logprobs"] = config_.top_logprobs;
  auto decoded = parse_generation_response(call("/speculate", body), config_.top_logprobs);
  return SpeculativeAnswer{std::move(decoded.answer), std::move(decoded.token_logits), decoded.latency_s};
}

AgenticOutput RemoteBackend::agentic_run(const Query& query) {
  auto body = request_body(query);
  body["max_steps"] = config_.max_steps;
  return parse_agentic_response(call("/agentic", body), config_.max_steps);
}

ReplayBackend::ReplayBackend(const std::filesystem::path& log_path, int max_top_logprobs, int max_steps)
    : max_top_logprobs_(max_top_logprobs), max_steps_(max_steps) {
  std::ifstream in(log_path);
  if (!in) throw ValidationError(fmt::format("cannot open exchange log '{}'", log_path.string()));
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, bool> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(fmt::format("{}:{}: {}", log_path.string(), line_no, e.what()));
    }
    const auto route = entry.at("route").get<std::string>();
    const auto& request = entry.at("request");
    const auto id = request.at("id").get<std::string>();
    responses_[{route, id}] = entry.at("response");
    if (!seen[id]) {
      seen[id] = true;
      Query q;
      q.id = id;
      q.image_ref = request.value("image_ref", std::string{});
      q.question = request.value("question", std::string{});
      queries_.push_back(std::move(q));
    }
  }
}

const json& ReplayBackend::lookup(const std::string& route, const std::string& id) const {
  const auto it = responses_.find({route, id});
  if (it == responses_.end()) {
    throw BackendUnavailable(fmt::format("no logged {} exchange for query {}", route, id));
  }
  return it->second;
}

JudgeOutput ReplayBackend::judge(const Query& query) {
  return parse_judge_response(lookup("/judge", query.id));
}

SpeculativeAnswer ReplayBackend::speculate(const Query& query) {
  auto decoded = parse_generation_response(lookup("/speculate", query.id), max_top_logprobs_);
  return SpeculativeAnswer{std::move(decoded.answer), std::move(decoded.token_logits), decoded.latency_s};
}

AgenticOutput ReplayBackend::agentic_run(const Query& query) {
  return parse_agentic_response(lookup("/agentic", query.id), max_steps_);
}

}  // namespace specfunnel
