#pragma once

#include <iosfwd>

namespace zihmm {

/// Exit codes: 0 success, 1 validation error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `zihmm` tool (subcommands loglik, bench, fit, simulate,
/// forecast).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zihmm
