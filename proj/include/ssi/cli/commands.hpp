#pragma once

#include <string>
#include <vector>

namespace ssi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitGradcheck = 5,
};

// Entry point of the `ssi` executable. Never throws; errors map to exit codes.
int run_cli(int argc, char** argv);
// Same, with the arguments after the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace ssi::cli
