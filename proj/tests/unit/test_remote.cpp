// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <thread>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "specfunnel/error.hpp"
#include "specfunnel/remote_backend.hpp"

using namespace specfunnel;
using nlohmann::json;

namespace {

// Generation server stub: answers each route with a fixed shape, with
// knobs for the failure modes under test.
class StubServer {
 public:
  explicit StubServer(std::string prefix = "") : prefix_(std::move(prefix)) {
    server_.Post(prefix_ + "/judge", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      last_judge_ = body;
      reply(res, json{{"g", body["id"] == "tools" ? 1 : 0}, {"latency_s", 0.01}});
    });
    server_.Post(prefix_ + "/speculate", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const int current = ++in_flight_;
      int seen = peak_.load();
      while (current > seen && !peak_.compare_exchange_weak(seen, current)) {
      }
      if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      --in_flight_;
      if (malformed) {
        res.set_content("{not json", "application/json");
        return;
      }
      if (omit_logprobs) {
        reply(res, json{{"answer", "A"}, {"tokens", json::array({{{"text", "A"}}})}, {"latency_s", 0.2}});
        return;
      }
      json tokens = json::array();
      for (int t = 0; t < 2; ++t) {
        json top = json::array();
        for (int i = 0; i < logprob_count; ++i) {
          top.push_back({{"token", "t" + std::to_string(i)}, {"logprob", -0.01 * (i * (t + 1)) - 0.001 * i}});
        }
        tokens.push_back({{"text", t == 0 ? "A" : "."}, {"top_logprobs", top}});
      }
      requested_top_ = body["top_logprobs"].get<int>();
      reply(res, json{{"answer", "A"}, {"tokens", tokens}, {"latency_s", 0.2}});
    });
    server_.Post(prefix_ + "/agentic", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      reply(res, json{{"answer", "C"},
                      {"depth", agentic_depth},
                      {"step_costs", json::array({{1.0, 0.5}, {1.0, 0.7}, {1.0, 0.0}})},
                      {"latency_s", 4.2}});
      (void)body;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + prefix_; }

  int delay_ms = 0;
  int logprob_count = 80;
  int agentic_depth = 2;
  bool malformed = false;
  bool omit_logprobs = false;
  std::atomic<int> peak_{0};
  int requested_top_ = 0;
  json last_judge_;

 private:
  static void reply(httplib::Response& res, const json& j) { res.set_content(j.dump(), "application/json"); }

  std::string prefix_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> in_flight_{0};
};

Query query(std::string id) {
  Query q;
  q.id = std::move(id);
  q.image_ref = "file://img.png";
  q.question = "which?";
  return q;
}

RemoteConfig config_for(const StubServer& s) {
  RemoteConfig c;
  c.endpoint = s.endpoint();
  c.timeout_s = 5.0;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "specfunnel_remote_test";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("judge and agentic calls decode the wire schema") {
  StubServer server;
  RemoteBackend backend(config_for(server));
  CHECK(backend.judge(query("plain")).g == 0);
  const auto j = backend.judge(query("tools"));
  CHECK(j.g == 1);
  CHECK(j.latency_s == 0.01);
  CHECK(server.last_judge_["prompt"] == kDefaultJudgePrompt);
  CHECK(server.last_judge_["image_ref"] == "file://img.png");

  const auto a = backend.agentic_run(query("x"));
  CHECK(a.answer == "C");
  CHECK(a.depth == 2);
  CHECK(a.step_costs.size() == 3);
  CHECK(a.latency_s == doctest::Approx(4.2).epsilon(1e-12));
}

TEST_CASE("returned tokens carry at most max_top_logprobs values, sorted") {
  StubServer server;
  auto cfg = config_for(server);
  cfg.top_logprobs = 64;
  RemoteBackend backend(cfg);
  const auto draft = backend.speculate(query("s"));
  CHECK(server.requested_top_ == 64);
  CHECK(draft.answer == "A");
  REQUIRE(draft.token_logits.size() == 2);
  for (const auto& t : draft.token_logits) {
    CHECK(t.size() <= 64);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.values()[i - 1] >= t.values()[i]);
  }

  GenerationRequest req{"g", "img", "q", 64};
  const auto gen = remote_generate(server.endpoint(), req, 5.0);
  CHECK(gen.token_text == std::vector<std::string>{"A", "."});
  for (const auto& t : gen.token_logits) CHECK(t.size() <= 64);
}

TEST_CASE("a server omitting logprobs is reported as missing logprobs") {
  StubServer server;
  server.omit_logprobs = true;
  RemoteBackend backend(config_for(server));
  CHECK_THROWS_WITH_AS(backend.speculate(query("s")), doctest::Contains("missing logprobs"), BackendUnavailable);
  CHECK_THROWS_WITH_AS(parse_generation_response(json{{"answer", "A"}, {"tokens", json::array()}, {"latency_s", 0}}, 64),
                       doctest::Contains("missing logprobs"), BackendUnavailable);
}

TEST_CASE("malformed responses and bad fields raise BackendUnavailable") {
  StubServer server;
  server.malformed = true;
  RemoteBackend backend(config_for(server));
  CHECK_THROWS_AS(backend.speculate(query("s")), BackendUnavailable);
  CHECK_THROWS_AS(parse_judge_response(json{{"g", 2}, {"latency_s", 0.1}}), BackendUnavailable);
  CHECK_THROWS_AS(parse_judge_response(json{{"latency_s", 0.1}}), BackendUnavailable);
  CHECK_THROWS_AS(parse_agentic_response(json{{"answer", "A"}, {"depth", 9}, {"step_costs", json::array()}}, 5),
                  BackendUnavailable);
}

TEST_CASE("agentic depth beyond max_steps is rejected") {
  StubServer server;
  server.agentic_depth = 6;
  RemoteBackend backend(config_for(server));
  CHECK_THROWS_AS(backend.agentic_run(query("deep")), BackendUnavailable);
}

TEST_CASE("slow servers time out") {
  StubServer server;
  server.delay_ms = 1500;
  auto cfg = config_for(server);
  cfg.timeout_s = 0.2;
  RemoteBackend backend(cfg);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(backend.speculate(query("slow")), BackendUnavailable);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(1400));
}

TEST_CASE("unreachable endpoints raise BackendUnavailable") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.timeout_s = 1.0;
  RemoteBackend backend(cfg);
  CHECK_THROWS_AS(backend.judge(query("x")), BackendUnavailable);
  CHECK_THROWS_AS(post_json("not a url", "/judge", json::object(), 1.0), BackendUnavailable);
}

TEST_CASE("endpoint path prefixes are honoured") {
  StubServer server("/api/v1");
  RemoteBackend backend(config_for(server));
  CHECK(backend.judge(query("plain")).g == 0);
}

TEST_CASE("in-flight requests are bounded") {
  StubServer server;
  server.delay_ms = 60;
  auto cfg = config_for(server);
  cfg.max_in_flight = 2;
  RemoteBackend backend(cfg);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&, i] { backend.speculate(query("p" + std::to_string(i))); });
  for (auto& t : threads) t.join();
  CHECK(server.peak_.load() <= 2);
  CHECK(server.peak_.load() >= 1);
}

TEST_CASE("logged exchanges replay to identical outputs") {
  const auto log_path = temp_path("exchanges.jsonl");
  SpeculativeAnswer live_draft;
  JudgeOutput live_judge;
  AgenticOutput live_run;
  {
    StubServer server;
    RemoteBackend backend(config_for(server), log_path);
    live_judge = backend.judge(query("r1"));
    live_draft = backend.speculate(query("r1"));
    live_run = backend.agentic_run(query("r1"));
  }
  ReplayBackend replay(log_path);
  REQUIRE(replay.queries().size() == 1);
  CHECK(replay.queries()[0].id == "r1");
  CHECK(replay.queries()[0].question == "which?");
  CHECK(replay.speculate(query("r1")) == live_draft);
  CHECK(replay.judge(query("r1")).g == live_judge.g);
  CHECK(replay.agentic_run(query("r1")) == live_run);
  CHECK_THROWS_AS(replay.speculate(query("unknown")), BackendUnavailable);
}

TEST_CASE("endpoint resolution falls back to the environment") {
  ::setenv(kEndpointEnvVar, "http://env-host:9000", 1);
  CHECK(resolve_endpoint("") == "http://env-host:9000");
  CHECK(resolve_endpoint("http://flag:1") == "http://flag:1");
  ::unsetenv(kEndpointEnvVar);
  CHECK(resolve_endpoint("").empty());
  RemoteConfig cfg;
  cfg.max_in_flight = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
