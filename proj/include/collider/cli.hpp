#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace collider {

/// Process exit statuses of the command-line tool.
enum ExitStatus : int { kExitOk = 0, kExitInputError = 1, kExitRuntimeError = 2 };

/// Runs one command line (`args[0]` is the program name). Normal output goes
/// to `out`, diagnostics to `err`. Every output directory receives its files
/// together with a manifest.json, or nothing at all when the command fails.
int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace collider
