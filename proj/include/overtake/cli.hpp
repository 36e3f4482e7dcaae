#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace overtake {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitDomain = 2 };

/// Entry point shared by the `overtake` binary and the tests. `args` excludes
/// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace overtake
