#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hpgan {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

// Runs one subcommand; args[0] is the program name. Diagnostics go to `err`,
// reports to `out`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, char** argv);

}  // namespace hpgan
