#include <doctest.h>

#include <chrono>

#include "verify.hpp"

using namespace fcl::verify;

TEST_CASE("default suite passes") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_checks();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0);
  CHECK(results.size() >= 10);
  for (const auto& r : results) {
    CAPTURE(r.name);
    CAPTURE(r.detail);
    CHECK(r.passed);
    CHECK(r.max_error <= r.tolerance);
  }
  CHECK(all_passed(results));
}

TEST_CASE("injected sign fault is caught") {
  VerifyOptions opt;
  opt.inject_grad_sign_fault = true;
  const auto results = run_checks(opt);
  CHECK_FALSE(all_passed(results));
  std::size_t failed_gradient_checks = 0;
  for (const auto& r : results) {
    if (!r.passed) {
      CHECK(r.name.find("gradient") != std::string::npos);
      ++failed_gradient_checks;
    }
  }
  CHECK(failed_gradient_checks >= 2);
}

TEST_CASE("too few Weierstrass terms fails the oracle check") {
  VerifyOptions opt;
  opt.weierstrass_terms = 10;
  bool found = false;
  for (const auto& r : run_checks(opt)) {
    if (r.name.find("Weierstrass") != std::string::npos) {
      found = true;
      CHECK_FALSE(r.passed);
    }
  }
  CHECK(found);
}

TEST_CASE("mixed relative error") {
  CHECK(mixed_relative_error(1e-9, 0.0) == doctest::Approx(1e-9));
  CHECK(mixed_relative_error(100.0, 101.0) == doctest::Approx(1.0 / 101.0));
  CHECK(mixed_relative_error(-2.0, -2.0) == 0.0);
}
