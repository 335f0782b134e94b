#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace subnyq::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDegenerate = 2,
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace subnyq::cli
