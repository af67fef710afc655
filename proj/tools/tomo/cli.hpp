#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tomo::cli {

/// Runs the `tomo` command line with `args` (program name excluded).
/// Returns 0 on success, 2 on a usage error and 1 on a runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tomo::cli
