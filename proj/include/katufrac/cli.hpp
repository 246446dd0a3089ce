#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace katufrac::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kBoundViolated = 2,
    kNonConvergence = 3,
    kHypothesisUnmet = 4,
    kUsage = 64,
};

/// Runs the command line (args excludes the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Formats with 17 significant digits; empty for NaN.
std::string format_number(double v);

}  // namespace katufrac::cli
