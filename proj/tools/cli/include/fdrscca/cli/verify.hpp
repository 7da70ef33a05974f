#pragma once

#include <cstdint>
#include <string>

#include "fdrscca/core.hpp"

namespace fdrscca::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool warning = false;  // passed or not, the run was too small to be trusted
  std::string detail;
};

// Empirical covariance of (1/n) X'Yv over `reps` datasets against Omega / n
// (pX = pY = 3, n = 200), entrywise within 3 bootstrap standard errors.
CheckResult check_theorem1(std::uint64_t seed, Index reps = 10000);

// Random (A, B, Sigma, n) instances; analytic 2n tr(A Sigma B Sigma) within 3
// Monte-Carlo SEs of the empirical trace covariance in all but one instance.
CheckResult check_lemma(std::uint64_t seed, Index reps = 50000, int instances = 20);

// Step-up BH against the brute-force max-k definition on random p-vectors,
// plus a worked five-value example.
CheckResult check_bh(std::uint64_t seed, int instances = 1000);

}  // namespace fdrscca::cli
