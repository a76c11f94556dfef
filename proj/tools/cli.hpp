#pragma once

#include <ostream>

namespace rim {

/// Entry point of the rim-inspect command line; returns the process exit code
/// (0 success, 1 usage or config error, 2 data error, 3 internal error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rim
