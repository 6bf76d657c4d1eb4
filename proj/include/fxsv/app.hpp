#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fxsv {

// Runs the command-line front end in-process. Returns the process exit code:
// 0 success, 1 partial failure, 2 invalid input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace fxsv
