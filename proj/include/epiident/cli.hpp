#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epiident {

// Runs one command line (args exclude the program name). Returns the exit code:
// 0 on success, 2 on usage errors, 1 on any other error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epiident
