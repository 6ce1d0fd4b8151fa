#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sglab {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kResources = 3,
  kNumerical = 4,
};

/// Runs one sglab invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sglab
