#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradeprobe::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,  // bad flags, config, inputs
    kExitRuntime = 3,     // grader unreachable, training failure, I/O
};

// Entry point for `gradeprobe <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gradeprobe::cli
