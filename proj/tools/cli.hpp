#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qconv::cli {

// Runs the command line `args` (without the program name) and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qconv::cli
