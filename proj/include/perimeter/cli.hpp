#pragma once

namespace perimeter {

/// Exit codes: 0 success, 2 usage or config error, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

int run_cli(int argc, const char* const* argv);

}  // namespace perimeter
