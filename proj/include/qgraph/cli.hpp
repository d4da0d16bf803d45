#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qgraph {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (spectrum, energy, images, rmt). `args` excludes
/// the program name. Results go to `out` unless --out names a file;
/// diagnostics go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qgraph
