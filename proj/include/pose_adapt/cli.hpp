#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pose_adapt/error.hpp"

namespace pose_adapt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

int exit_code_for(ErrorCode code);

// Runs one subcommand. `args` excludes the program name. Errors go to `err`
// as a single JSON line {"error": <code>, "message": <text>}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pose_adapt::cli
