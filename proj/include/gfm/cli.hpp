#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gfm/error.hpp"

namespace gfm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code(ErrorKind kind);

// Runs one invocation. args[0] is the program name. Errors are reported as a
// single line "error: <Kind>: <message>" on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Fixed CSV headers of the evaluate subcommand.
const char* depth_csv_header();
const char* gamma_csv_header();

}  // namespace gfm::cli
