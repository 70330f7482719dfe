#pragma once

// Invariant checks shared by the `validate` command and the acceptance binary:
// derivative identities, convexity, sup-inf duality, stationarity, Nishimori,
// quadrature against Monte Carlo, closed-form error agreement, GAMP tracking
// and bitwise reproducibility.

#include <cstdint>
#include <string>
#include <vector>

namespace glmphase {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed discrepancy (or statistic)
  double tolerance = 0.0;  // pass threshold for value
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 20240601;
  /// Smaller GAMP instances and fewer Monte-Carlo draws.
  bool quick = false;
};

std::vector<CheckResult> property_suite(const ValidationOptions& opts = {});

}  // namespace glmphase
