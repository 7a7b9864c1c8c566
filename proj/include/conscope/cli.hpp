#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation or domain error
inline constexpr int kExitUsage = 2;

/// Runs `conscope <args...>`; args excludes the program name. Results go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conscope::cli
