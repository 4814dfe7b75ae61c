#pragma once

#include <iosfwd>
#include <vector>
#include <string>

namespace patchlr::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kIoError = 3,
    kNumericalError = 4,
};

/// Runs one CLI invocation; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace patchlr::cli
