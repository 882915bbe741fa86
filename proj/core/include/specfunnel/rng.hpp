#pragma once

// SPDX-License-Identifier: Apache-2.0

// Keyed random streams. Every draw in the synthetic world comes from a
// stream keyed on (seed, query id, phase, step), never from shared state,
// so batching and scheduling order cannot change model outputs.

#include <cstdint>
#include <random>
#include <string_view>

namespace specfunnel {

using Rng = std::mt19937_64;

enum class Phase : std::uint64_t {
  Workload = 1,
  Judge = 2,
  Speculate = 3,
  Agentic = 4,
  Quota = 5,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, 64 bit.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b));
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view id, Phase phase,
                                   std::uint64_t step = 0) noexcept {
  return combine(combine(combine(mix64(seed), hash_string(id)), static_cast<std::uint64_t>(phase)),
                 step);
}

inline Rng make_rng(std::uint64_t key) { return Rng(key); }

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace specfunnel
