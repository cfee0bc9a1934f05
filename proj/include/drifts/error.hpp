#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drifts {

enum class ErrorCode {
  FormatError,
  UnsupportedDatatype,
  UnsupportedShape,
  IoError,
  GeometryError,
  UnknownLabel,
  EmptyMask,
  TooFewVoxels,
  MissingParams,
  InvalidGamma,
  InvalidRelaxometry,
  InvalidRange,
  TruncatedFile,
  DuplicateTensor,
  IncompatibleCheckpoints,
  InvalidAlpha,
  EmptySample,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as this exception; `code()` is the
/// machine-readable part, `what()` the human one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace drifts
