#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memen {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args[0] is the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memen
