#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seacache::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCapability = 2;
inline constexpr int kExitInternal = 3;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one subcommand. `args` excludes the program name. CSV goes to `out`
/// unless --out is given; diagnostics go to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace seacache::cli
