#pragma once

#include <iosfwd>

namespace eomkit {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,  // bad arguments or invalid input files
    kExitFit = 3,    // a fit failed or did not converge
};

/// Runs the `eomkit` command line; human-readable output goes to `out`,
/// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eomkit
