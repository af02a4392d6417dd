#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace besovreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;

inline constexpr const char* kVersion = "0.1.0";

// Entry point of the besovreg command line tool. Returns the process exit
// code: 0 success, 2 configuration, usage or input error, 3 validation failure or
// replay mismatch, 1 any other runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace besovreg::cli
