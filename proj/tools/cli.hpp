#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cns::cli {

/// Parses `args` (without the program name), runs the requested command and
/// returns the process exit code. Summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cns::cli
