#pragma once

namespace svreg::oracle {

/// Run the oracle cross-check suites (dense linear algebra, finite
/// differences, matrix exponential, log-gamma Monte Carlo), printing one
/// pass/fail line each. Returns the number of failures.
int run_selftest();

}  // namespace svreg::oracle
