#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>
#include <string>

namespace specfunnel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An answer with zero generated tokens reached a scoring routine.
class EmptyAnswer : public Error {
 public:
  EmptyAnswer() : Error("empty answer: no generated tokens") {}
};

/// A model backend could not produce a usable response.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// Statistics requested over a sample with no spread (or too few points).
class DegenerateDistribution : public Error {
 public:
  DegenerateDistribution(std::string what, double point_mass)
      : Error(std::move(what)), point_mass_(point_mass) {}

  /// Location of the point mass the sample collapsed to.
  double point_mass() const noexcept { return point_mass_; }

 private:
  double point_mass_;
};

/// beta * alpha == 1: every query bypasses the fallback stage.
class InfiniteSpeedup : public Error {
 public:
  InfiniteSpeedup() : Error("beta * alpha == 1: fallback stage is empty, speedup is unbounded") {}
};

}  // namespace specfunnel
