#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcirc::cli {

enum ExitCode : int { exit_ok = 0, exit_diagnostics = 1, exit_usage = 2 };

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// File names written by `figures`, in generation order.
const std::vector<std::string>& figure_files();

} // namespace gcirc::cli
