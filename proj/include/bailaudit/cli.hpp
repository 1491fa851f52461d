#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bailaudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitPartialFailure = 2;
inline constexpr int kExitUsage = 64;

// Runs one CLI invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Directory holding the shipped lexicons, templates and parser rules.
std::string default_data_dir();

}  // namespace bailaudit::cli
