#pragma once

#include <iosfwd>

namespace tvselect::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kNumericalFailure = 1;
inline constexpr int kUsageError = 2;

/// Parses `argv` and runs the selected subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvselect::cli
