#pragma once

#include <iosfwd>

namespace gesture::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Parses and dispatches one gesturegen invocation. Results go to `out`,
// diagnostics (one line per failure) to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gesture::cli
