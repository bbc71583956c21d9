#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace selfsim {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitUnsolvable = 3,
    kExitNoEigenvalue = 4,
    kExitVerifyFailed = 5,
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace selfsim
