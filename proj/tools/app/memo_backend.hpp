#pragma once

// SPDX-License-Identifier: Apache-2.0

// Caches every backend response by query id. Ablations replay the same
// workload many times; caching keeps remote runs to one call per query
// and guarantees every sweep point scores identical logits.

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "specfunnel/backend.hpp"

namespace specfunnel::app {

class MemoBackend final : public Backend {
 public:
  explicit MemoBackend(Backend& inner) : inner_(inner) {}

  JudgeOutput judge(const Query& q) override { return cached(judged_, q, [&] { return inner_.judge(q); }); }
  SpeculativeAnswer speculate(const Query& q) override {
    return cached(drafts_, q, [&] { return inner_.speculate(q); });
  }
  AgenticOutput agentic_run(const Query& q) override {
    return cached(runs_, q, [&] { return inner_.agentic_run(q); });
  }

  /// Draft answers seen so far, by query id.
  std::map<std::string, SpeculativeAnswer> drafts() const {
    std::lock_guard lock(mutex_);
    return drafts_;
  }

 private:
  template <class T, class Fn>
  T cached(std::map<std::string, T>& cache, const Query& q, Fn&& call) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache.find(q.id); it != cache.end()) return it->second;
    }
    // Computed outside the lock; responses are deterministic, so a racing
    // duplicate call stores the same value.
    T value = call();
    std::lock_guard lock(mutex_);
    return cache.emplace(q.id, std::move(value)).first->second;
  }

  Backend& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, JudgeOutput> judged_;
  std::map<std::string, SpeculativeAnswer> drafts_;
  std::map<std::string, AgenticOutput> runs_;
};

}  // namespace specfunnel::app
