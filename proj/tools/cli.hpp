#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gspot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCorrupt = 3;
inline constexpr int kExitInternal = 1;

// Runs the gspot command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gspot::cli
