#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fcl::verify {

struct VerifyOptions {
  std::uint64_t weierstrass_terms = 1'000'000;
  double fd_step = 1e-6;
  // Self-test hook: negates every analytic gradient before comparison so the
  // gradient checks are expected to fail.
  bool inject_grad_sign_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

enum class CheckGroup { Degeneracy, Gradients, SpecialFunctions, Identities, Properties };

/// Runs the loss and special-function invariant suite.
std::vector<CheckResult> run_checks(const VerifyOptions& options = {});
std::vector<CheckResult> run_group(CheckGroup group, const VerifyOptions& options = {});

bool all_passed(const std::vector<CheckResult>& results);

/// Error measure used by the gradient checks: |a - b| / max(1, |a|, |b|).
double mixed_relative_error(double a, double b);

} // namespace fcl::verify
