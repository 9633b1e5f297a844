#pragma once

#include <ostream>

namespace umr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitSchema = 2,
  kExitMissingFile = 3,
  kExitCorruptContainer = 4,
  kExitComputation = 5,
};

/// Entry point of the `umr` tool. Never throws; failures map to exit codes
/// with a one-line message on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace umr::cli
