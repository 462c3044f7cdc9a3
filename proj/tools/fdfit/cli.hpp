#pragma once

#include <string>
#include <vector>

namespace fdfit {

/// Parse arguments (without the program name), run the requested stage and
/// return the process exit code. Errors are reported on stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace fdfit
