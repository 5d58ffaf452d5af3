#pragma once

#include <iosfwd>

namespace qreason::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Subcommands: gen-data, train-reason, train-answer, eval, trace, infer, gradcheck.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qreason::cli
