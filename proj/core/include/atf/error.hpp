// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error.hpp
 * @brief  Error type shared by every atf component.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atf {

enum class ErrorKind {
  kShape,
  kChannel,
  kConfig,
  kIo,
  kBadMagic,
  kTruncated,
  kMissingFile,
  kShapeMismatch,
  kInvalidMask,
  kVersionMismatch,
  kCorrupt,
  kEmptyGroundTruth,
  kMissingPrediction,
  kNumeric,
  kUsage,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library surfaces as an Error carrying a kind, so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

} // namespace atf
