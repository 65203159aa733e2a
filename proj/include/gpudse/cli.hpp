#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gpudse {

/// Exit codes of the gpu-dse tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpudse
