#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unrealdc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line (args excludes the program name). Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_main(int argc, char** argv);

std::string version();

}  // namespace unrealdc::cli
