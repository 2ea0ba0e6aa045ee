#pragma once

#include <iosfwd>

namespace mixflow::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNotConverged = 2,
  kCheckFailed = 3,
};

inline constexpr int kSummarySchemaVersion = 1;

/// Entry point of the `mixflow` tool: `solve`, `pga`, `ksp` and `check`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixflow::cli
