#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ppgsleep::cli {

// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kIo = 3,
    kValidation = 4,
    kProtocol = 5,
};

// Runs one command line (args excludes the program name) and returns the
// exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ppgsleep::cli
