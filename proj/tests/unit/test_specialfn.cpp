#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "specialfn.hpp"

namespace sf = fcl::specialfn;

namespace {
bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}
}

// Reference values computed with mpmath at 30 digits.
TEST_CASE("sf::gamma matches frozen oracle values") {
  CHECK(rel_close(sf::gamma(1.5), 0.886226925452758014, 1e-14));
  CHECK(rel_close(sf::gamma(0.7), 1.298055332647557785, 1e-14));
  CHECK(rel_close(sf::gamma(1.3), 0.897470696306277188, 1e-14));
  CHECK(rel_close(sf::gamma(1.9), 0.961765831907387425, 1e-14));
  CHECK(rel_close(sf::gamma(1.1), 0.951350769866873184, 1e-14));
  CHECK(rel_close(sf::gamma(0.5), std::sqrt(M_PI), 1e-14));
  CHECK(rel_close(sf::gamma(2.0), 1.0, 1e-15));
}

TEST_CASE("sf::gamma reproduces factorials") {
  double fact = 1.0;
  for (int n = 0; n <= 10; ++n) {
    if (n > 0) fact *= n;
    CHECK(rel_close(sf::gamma(n + 1.0), fact, 1e-11));
  }
  CHECK(rel_close(sf::gamma(20.0), 121645100408832000.0, 1e-13));
}

TEST_CASE("sf::digamma matches frozen oracle values") {
  CHECK(sf::digamma(1.0) == doctest::Approx(-sf::kEulerGamma).epsilon(1e-14));
  CHECK(std::abs(sf::digamma(1.0) + 0.5772156649015329) < 1e-10);
  CHECK(std::abs(sf::digamma(2.0) - 0.4227843350984671) < 1e-14);
  CHECK(std::abs(sf::digamma(1.5) - 0.0364899739785765) < 1e-14);
  CHECK(std::abs(sf::digamma(0.7) + 1.220023553697935) < 1e-14);
  CHECK(std::abs(sf::digamma(1.3) + 0.169190888866800) < 1e-14);
  CHECK(std::abs(sf::digamma(1.9) - 0.356184161164060) < 1e-14);
  CHECK(std::abs(sf::digamma(1.1) + 0.423754940411077) < 1e-14);
}

TEST_CASE("recurrences hold across the domain") {
  for (double z = 0.05; z < 19.0; z += 0.173) {
    CHECK(rel_close(sf::gamma(z + 1.0), z * sf::gamma(z), 1e-13));
    CHECK(std::abs(sf::digamma(z + 1.0) - sf::digamma(z) - 1.0 / z) < 1e-9 * std::max(1.0, 1.0 / z));
    CHECK(std::abs(sf::log_gamma(z) - std::log(sf::gamma(z))) < 1e-13 * std::max(1.0, std::abs(sf::log_gamma(z))));
  }
}

TEST_CASE("sf::digamma is the derivative of log sf::gamma") {
  const double h = 1e-5;
  for (double z : {0.6, 1.0, 1.5, 2.7, 7.0, 15.0}) {
    const double fd = (sf::log_gamma(z + h) - sf::log_gamma(z - h)) / (2 * h);
    CHECK(std::abs(fd - sf::digamma(z)) < 1e-8);
  }
}

TEST_CASE("error bounds are reported") {
  const auto g = sf::gamma_with_error(1.5);
  CHECK(g.value == sf::gamma(1.5));
  CHECK(g.absolute_error_bound > 0.0);
  CHECK(g.absolute_error_bound < 1e-13);
  const auto d = sf::digamma_with_error(1.5);
  CHECK(d.value == sf::digamma(1.5));
  CHECK(d.absolute_error_bound > 0.0);
}

TEST_CASE("Weierstrass product agrees with sf::gamma") {
  for (double z : {0.7, 1.3, 1.5, 1.9}) {
    CHECK(std::abs(sf::gamma_weierstrass(z, 1'000'000) - sf::gamma(z)) < 1e-5);
  }
  // Convergence is O(1/terms): more terms must not be worse.
  const double coarse = std::abs(sf::gamma_weierstrass(1.5, 1000) - sf::gamma(1.5));
  const double fine = std::abs(sf::gamma_weierstrass(1.5, 100000) - sf::gamma(1.5));
  CHECK(fine < coarse);
}

TEST_CASE("domain errors") {
  for (double z : {0.0, -1.0, -0.5, 20.5, double(NAN), double(INFINITY)}) {
    CAPTURE(z);
    CHECK_THROWS_AS(sf::gamma(z), fcl::Error);
    CHECK_THROWS_AS(sf::digamma(z), fcl::Error);
  }
  try {
    (void)sf::gamma(-2.0);
    FAIL("expected throw");
  } catch (const fcl::Error& e) {
    CHECK(e.code() == fcl::ErrorCode::Domain);
  }
  CHECK_THROWS_AS(sf::gamma_weierstrass(1.5, 0), fcl::Error);
  CHECK_NOTHROW(sf::gamma(20.0));
  CHECK_NOTHROW(sf::gamma(1e-3));
}
