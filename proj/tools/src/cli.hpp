#pragma once

#include <iosfwd>

namespace nsshape::cli {

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 usage, parse or validation error, 2 solver failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nsshape::cli
