#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace twistlab::cli {

/// Runs one command line. `args[0]` is the program name. Returns the exit
/// code: 0 on success, 1 on a numerical failure, 2 on invalid input.
///
/// Commands: orbit, minimize, greene, green-bundles, lyapunov, regularity,
/// rate, sweep. `--config FILE` loads a JSON or TOML document whose keys
/// mirror the flags; flags given on the command line win. The environment
/// variable TWISTLAB_MAX_THREADS caps every thread count.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twistlab::cli
