#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace simplab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name. Reports go to `out`
// (or the --out file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace simplab::cli
