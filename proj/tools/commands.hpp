#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ope::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kCapabilityError = 3;
inline constexpr int kResourceError = 4;

// Runs `ope <subcommand> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ope::cli
