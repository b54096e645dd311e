#pragma once

// Command line front end: validate, weave, simulate, check, sweep, gen.
//
// Exit codes: 0 success, 1 parse, validation or model error, 2 usage error.

#include <ostream>
#include <string>
#include <vector>

namespace cpssv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpssv
