#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tasep::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kArgumentError = 2,
    kResourceGuard = 3,
};

/// Runs the command line @p args (args[0] is the program name). CSV goes to
/// @p out unless --out is given; diagnostics and summaries go to @p err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step" (endpoints included within half a step), a comma
/// list, or a single number.
std::vector<double> parseGrid(std::string_view text);

}  // namespace tasep::cli
