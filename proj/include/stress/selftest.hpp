#pragma once

#include <ostream>

namespace stress {

/// Checks the numerical kernels against the reference oracles and runs a small
/// synthetic end-to-end evaluation. Prints one PASS/FAIL line per suite.
bool run_selftest(std::ostream& out, unsigned jobs);

}  // namespace stress
