#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uec::cli {

// Stable across subcommands.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kRuntimeAbort = 3,
};

// Runs the `uec` command line with `args` excluding the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uec::cli
