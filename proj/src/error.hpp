// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#pragma once

#include <stdexcept>
#include <string>

namespace skws {

enum class ErrorKind {
  Usage,    // bad arguments or configuration
  Shape,    // tensor dimension mismatch
  State,    // call not valid in the object's current state
  Format,   // malformed file or record
  Io,       // filesystem failure
  Numeric,  // NaN/Inf where a finite value is required
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace skws
