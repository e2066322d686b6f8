// SPDX-License-Identifier: Apache-2.0
#include "atf/error.hpp"

namespace atf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::kShape:
    return "ShapeError";
  case ErrorKind::kChannel:
    return "ChannelError";
  case ErrorKind::kConfig:
    return "ConfigError";
  case ErrorKind::kIo:
    return "IoError";
  case ErrorKind::kBadMagic:
    return "BadMagic";
  case ErrorKind::kTruncated:
    return "Truncated";
  case ErrorKind::kMissingFile:
    return "MissingFile";
  case ErrorKind::kShapeMismatch:
    return "ShapeMismatch";
  case ErrorKind::kInvalidMask:
    return "InvalidMask";
  case ErrorKind::kVersionMismatch:
    return "VersionMismatch";
  case ErrorKind::kCorrupt:
    return "Corrupt";
  case ErrorKind::kEmptyGroundTruth:
    return "EmptyGroundTruth";
  case ErrorKind::kMissingPrediction:
    return "MissingPrediction";
  case ErrorKind::kNumeric:
    return "NumericError";
  case ErrorKind::kUsage:
    return "UsageError";
  }
  return "Error";
}

} // namespace atf
