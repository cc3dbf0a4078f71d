#pragma once

#include <iosfwd>

namespace webtrail::cli {

/// The whole command-line surface; returns the process exit code.
/// 0 ok, 1 episode failures, 2 usage, 3 data error, 4 backend error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace webtrail::cli
