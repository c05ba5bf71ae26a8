#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qlsd::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kDomain = 3,
  kDivergence = 4,
  kIo = 5,
  kOptimization = 6,
};

// Entry point shared by the executable and the tests. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qlsd::cli
