#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gaugefix {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
};

// Self-contained invariant checks on randomly generated networks: orbit
// invariance, gradient correctness against finite differences, radiality,
// balanced representatives, coordinate transform laws and the relaxation law.
// Prints one line per check.
std::vector<CheckResult> run_validation(std::ostream& out, unsigned long long seed = 2024);

}  // namespace gaugefix
