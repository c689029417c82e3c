#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace coldloop::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Runs one invocation. `args` excludes the program name. Human-readable
/// diagnostics go to `err`; `out` receives exactly one JSON status line.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace coldloop::cli
