#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polyinit::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kNumerical = 3 };

/// Runs the command line tool on `args` (without the program name). All
/// output goes to `out` and `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polyinit::cli
