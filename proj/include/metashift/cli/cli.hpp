#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace metashift::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,  // anything not covered below
  kValidation = 2,
  kMissingArtifact = 3,
  kNumerical = 4,
};

/// Runs the command line `args` (without the program name). Progress goes to
/// `log`; errors are reported there too and mapped to an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace metashift::cli
