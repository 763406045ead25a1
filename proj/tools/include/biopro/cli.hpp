#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace biopro::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitValidation = 5;

/// Runs one `biopro` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace biopro::cli
