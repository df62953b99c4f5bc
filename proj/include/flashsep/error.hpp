// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace flashsep {

/// Raised when an input violates a documented precondition (bad header,
/// mismatched dimensions, malformed matrix, ...). The CLI maps it to exit 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace flashsep
