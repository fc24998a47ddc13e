#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace larope::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kDiverged = 3,
  kIo = 4,
};

/// Runs one invocation of the `larope` tool. `args` excludes the program
/// name. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `%.17g` formatting used for every numeric CSV/JSON field.
std::string format_real(double v);

}  // namespace larope::cli
