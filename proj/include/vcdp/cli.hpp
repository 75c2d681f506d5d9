#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vcdp {

/// Entry point of the command-line tool. argv[0] is the program name.
/// Returns the process exit code; diagnostics go to `err`, progress to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vcdp
