#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ergostop::cli {

/// Exit codes: 0 success, 1 input error, 2 assumption-violation verdict.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitVerdict = 2;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ergostop::cli
