#include "drifts/error.hpp"

namespace drifts {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::TooFewVoxels: return "TooFewVoxels";
    case ErrorCode::MissingParams: return "MissingParams";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::InvalidRelaxometry: return "InvalidRelaxometry";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DuplicateTensor: return "DuplicateTensor";
    case ErrorCode::IncompatibleCheckpoints: return "IncompatibleCheckpoints";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace drifts
