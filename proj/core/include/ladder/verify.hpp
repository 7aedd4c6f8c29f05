#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ladder {

struct CheckResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the full equivalence/invariant suite (sharding identity, engine vs
// reference, stale-input semantics, overlap laws, trends, conservation,
// wallclock overlap, decode consistency, determinism). Prints one
// [PASS]/[FAIL] line per check to `out` when non-null.
std::vector<CheckResult> run_acceptance_checks(std::ostream* out);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace ladder
