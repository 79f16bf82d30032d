#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lorga::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double predicted = 0.0;
  std::string detail;
};

// Self-contained, seeded verification of the core identities: adapter
// gradient linearity, SVD-initialization optimality, truncated-SVD
// residuals, zeta scale stability, streaming memory, and micro-batch
// accumulation equivalence.
std::vector<CheckResult> run_verification(std::uint64_t seed = 42);

}  // namespace lorga::verify
