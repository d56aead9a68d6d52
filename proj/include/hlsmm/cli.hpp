#pragma once

#include <ostream>

namespace hlsmm::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// Entry point of the `hlsmm` tool. Regular output goes to `out`, the one-line
/// diagnostics and usage text to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hlsmm::cli
