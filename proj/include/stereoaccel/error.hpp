// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef STEREOACCEL_ERROR_HPP_
#define STEREOACCEL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace stereoaccel {

// Malformed shapes, files, or arguments. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Which scheduling constraint could not be met.
enum class Constraint { kBuffer, kCoverage };

inline const char* to_string(Constraint c) {
  return c == Constraint::kBuffer ? "buffer capacity" : "filter coverage";
}

// No schedule satisfies the buffer or coverage constraint. Maps to exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(Constraint violated, const std::string& what)
      : std::runtime_error(std::string(to_string(violated)) + ": " + what),
        violated_(violated) {}

  Constraint violated() const noexcept { return violated_; }

 private:
  Constraint violated_;
};

// An internal consistency check failed. Maps to exit code 4.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace stereoaccel

#endif  // STEREOACCEL_ERROR_HPP_
