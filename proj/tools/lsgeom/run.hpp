#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsgeom::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kValidation = 2, kNotConverged = 3 };

/// Runs one command line (without the program name). The result document is
/// written to --out when given, otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsgeom::cli
