#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pairprobit::cli {

/// Runs the command line `args` (without the program name). Returns 0 on
/// success, 1 on a usage error and 2 on a numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pairprobit::cli
