#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rexp::cli {

// Stable process exit codes.
enum ExitCode : int { kOk = 0, kIoError = 1, kInvalid = 2, kGlitchHalt = 3 };

/// Entry point shared by the `rexp` executable and the tests. `args` excludes
/// the program name. Reports go to `out`, progress and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_gen(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_report(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rexp::cli
