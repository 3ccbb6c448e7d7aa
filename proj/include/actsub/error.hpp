#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace actsub {

enum class ErrorCode {
  kInvalidInput,
  kNumericalFailure,
  kDegenerateBasis,
  kDegenerateActivation,
  kConfigError,
  kFormatError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(ErrorCode::kInvalidInput, what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what)
      : Error(ErrorCode::kNumericalFailure, what) {}
};

class DegenerateBasis : public Error {
 public:
  explicit DegenerateBasis(const std::string& what) : Error(ErrorCode::kDegenerateBasis, what) {}
};

class DegenerateActivation : public Error {
 public:
  explicit DegenerateActivation(const std::string& what)
      : Error(ErrorCode::kDegenerateActivation, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfigError, what) {}
};

enum class FormatErrorKind {
  kBadMagic,
  kBadVersion,
  kTruncated,
  kNonFinitePayload,
  kGarbled,
};

const char* to_string(FormatErrorKind kind);

// Raised by the file readers. For the binary formats `position` is a byte
// offset (an element index for kNonFinitePayload); for CSV inputs it is the
// 1-based line number.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, std::uint64_t position, const std::string& what);

  FormatErrorKind kind() const { return kind_; }
  std::uint64_t position() const { return position_; }

 private:
  FormatErrorKind kind_;
  std::uint64_t position_;
};

}  // namespace actsub
