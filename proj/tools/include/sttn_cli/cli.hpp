#pragma once

#include <iosfwd>

namespace sttn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand: synth, train, eval, forecast, gradcheck, dump-attn.
// Usage errors print help to `err` and return 2; library errors print the
// message and return 1.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sttn::cli
