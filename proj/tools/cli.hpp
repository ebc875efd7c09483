#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fisheyex::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericError = 3;

/// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Oracle and invariant checks behind `fisheyex selftest`; one PASS/FAIL line each.
bool selftest(std::ostream& out);

}  // namespace fisheyex::cli
