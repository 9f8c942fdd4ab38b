#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resdeconv::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kBadArguments = 1,
  kIoFailure = 2,
  kToleranceBreach = 3,
};

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Results go to `out`, diagnostics and usage to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resdeconv::cli
