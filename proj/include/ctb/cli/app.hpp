#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ctb::cli {

enum ExitCode : int { ok = 0, config_error = 2, numeric_failure = 3, near_collision = 4, infeasible = 5 };

// Entry point of the command-line tool; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctb::cli
