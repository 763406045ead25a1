#include "biopro/error.hpp"

namespace biopro {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kChecksumMismatch: return "checksum-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kValidation: return "validation";
  }
  return "unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kRange:
      return ErrorCategory::kUsage;
    case ErrorCode::kIo:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kChecksumMismatch:
    case ErrorCode::kTruncated:
    case ErrorCode::kFormat:
      return ErrorCategory::kIo;
    case ErrorCode::kNonFinite:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kDegenerate:
    case ErrorCode::kNumeric:
      return ErrorCategory::kNumeric;
    case ErrorCode::kDimension:
    case ErrorCode::kValidation:
      return ErrorCategory::kValidation;
  }
  return ErrorCategory::kValidation;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace biopro
