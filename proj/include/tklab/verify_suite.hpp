#pragma once

#include <string>
#include <vector>

namespace tklab {

// One named check of the reproduction suite. `anchor` is the stable citation
// tag downstream tooling keys on; `detail` carries the computed values or the
// failure reason.
struct VerifyCheck {
  std::string name;
  std::string anchor;
  bool passed = false;
  std::string detail;
};

struct VerifySuiteResult {
  std::vector<VerifyCheck> checks;
  bool all_passed() const;
  const VerifyCheck* first_failed() const;
};

// Runs the exact reproduction suite: the stored counterexample witnesses,
// the factorizing two-parameter family, the closed-form dependent joints at
// both reference parameter points, product-universality spot checks, the
// embedding-collision construction, and the rule-engine verdicts for the
// three reference kernels. Everything is checked in rational arithmetic.
// `inject_fault` corrupts one stored witness coefficient before
// verification, so the failure path is itself testable.
VerifySuiteResult run_verify_suite(bool inject_fault = false);

}  // namespace tklab
