#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pension::cli {

inline constexpr const char* kToolName = "pension";
inline constexpr const char* kToolVersion = PENSION_TOOL_VERSION;

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,  // a requested cross-check missed its tolerance
    kError = 2,        // bad input, bad config or a solver failure
};

/// Parses `args` (without the program name) and runs the command. Reports go
/// to files under --out; progress goes to `log`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace pension::cli
