#pragma once

#include <string>
#include <vector>

namespace fcd::cli {

/// Parses and runs one command line (without the program name). Returns the
/// process exit code: 0 success, 1 usage or validation error, 2 internal
/// error.
int dispatch(const std::vector<std::string>& args);

}  // namespace fcd::cli
