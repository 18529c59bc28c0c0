#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecbayes {

/// Exit codes of the `ec` command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,         // unreadable input, model or elicitation failure
  kExitConvergence = 3,  // sampler diagnostics failed under --strict
};

/// Runs the `ec` command line. `args` excludes the program name. Payloads go
/// to `out` (or the --out file), human-readable tables and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ecbayes
