#pragma once

// SPDX-License-Identifier: Apache-2.0

// Helpers for reading optional, typed JSON fields with path diagnostics.

#include <initializer_list>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "specfunnel/error.hpp"

namespace specfunnel::detail {

template <class T>
void read_field(const nlohmann::json& j, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", key, e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", key, e.what()));
  }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (auto k : known) found = found || k == key;
    if (!found) throw ValidationError(fmt::format("{}: unknown field", key));
  }
}

}  // namespace specfunnel::detail
