// SPDX-License-Identifier: Apache-2.0
//
// The sfcloops command line, callable in-process.
//
// Exit codes: 0 success, 1 verification failure, 2 usage, parse or I/O error.

#pragma once

#include <iosfwd>

namespace sfcloops::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

/// Default worker count: $SFC_LOOPS_WORKERS when set, else 1.
int default_workers();

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sfcloops::cli
