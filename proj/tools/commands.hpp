#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xpca::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit status: 0 on success, the numeric ErrorCode otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xpca::cli
