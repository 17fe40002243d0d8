#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mst {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one invocation; args excludes the program name. The report goes to
/// `out` (unless --out is given) and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mst
