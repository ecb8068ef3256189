#pragma once

#include <ostream>

namespace atekit::cli {

/// Exit codes: 0 success, 2 invalid input or usage, 3 estimation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitEstimation = 3;

/// Entry point for the ate_toolkit binary. Machine-readable JSON goes to out,
/// diagnostics and the resolved config echo go to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atekit::cli
