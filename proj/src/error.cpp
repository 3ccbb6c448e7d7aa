#include "actsub/error.hpp"

namespace actsub {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kDegenerateBasis: return "DegenerateBasis";
    case ErrorCode::kDegenerateActivation: return "DegenerateActivation";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kBadMagic: return "BadMagic";
    case FormatErrorKind::kBadVersion: return "BadVersion";
    case FormatErrorKind::kTruncated: return "Truncated";
    case FormatErrorKind::kNonFinitePayload: return "NonFinitePayload";
    case FormatErrorKind::kGarbled: return "Garbled";
  }
  return "Unknown";
}

FormatError::FormatError(FormatErrorKind kind, std::uint64_t position, const std::string& what)
    : Error(ErrorCode::kFormatError,
            std::string(to_string(kind)) + " at " + std::to_string(position) + ": " + what),
      kind_(kind),
      position_(position) {}

}  // namespace actsub
