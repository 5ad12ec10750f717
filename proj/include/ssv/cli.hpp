#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the ssvkit binary. args[0] is the program name. Data
// goes to `out` or to files named by flags, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssv::cli
