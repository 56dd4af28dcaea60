// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <stdexcept>
#include <string>

namespace prefmt {

enum class ErrorCode {
  kInvalidInput = 1,
  kInvalidConfiguration,
  kTransport,
  kMalformedResponse,
  kHttpStatus,
  kDivergence,
  kMissingArtifact,
  kInvalidArtifact,
  kIo,
};

const char* error_code_name(ErrorCode code);

// All library failures are reported through this exception. The C API maps
// `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace prefmt
