#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biopro {

enum class ErrorCode {
  kUsage,
  kIo,
  kBadMagic,
  kVersionMismatch,
  kChecksumMismatch,
  kTruncated,
  kFormat,
  kDimension,
  kRange,
  kNonFinite,
  kInsufficientData,
  kDegenerate,
  kNumeric,
  kValidation,
};

std::string_view to_string(ErrorCode code) noexcept;

// Coarse grouping used for process exit codes.
enum class ErrorCategory { kUsage, kIo, kNumeric, kValidation };

ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace biopro
