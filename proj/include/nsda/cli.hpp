#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nsda {

/// Exit statuses of the nsda command.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,  // bad flags or parameter values
    kExitDivergence = 2,
    kExitIngestion = 3,  // unreadable image, unknown dataset, bad output dir
    kExitVerification = 4,
    kExitInternal = 5,  // non-convergence and anything unexpected
};

/// args excludes the program name. Errors are written to `err` as a single
/// line "error[<kind>]: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nsda
