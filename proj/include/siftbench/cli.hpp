#pragma once

#include <iosfwd>

namespace siftbench {

/// Exit codes of the sift-bench command line tool.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Entry point of the `sift-bench` tool (subcommands detect, match, deform,
/// eval). Writes results to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace siftbench
