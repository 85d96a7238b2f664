#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adbench {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitValidation = 3,
    kExitExecution = 4,
    kExitGap = 5,
    kExitCalibration = 6,
};

/// Entry point of the `adbench` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adbench
