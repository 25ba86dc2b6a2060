#include "specialfn.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace fcl::specialfn {

namespace {

constexpr double kMaxArgument = 20.0;

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

// Observed worst-case relative error of the Lanczos sum on [0.5, 20], with margin.
constexpr double kGammaRelError = 2e-14;
constexpr double kDigammaAbsError = 1e-14;

void check_domain(double z, const char* fn) {
  if (!(z > 0.0) || !(z <= kMaxArgument)) {
    std::ostringstream msg;
    msg << fn << ": argument " << z << " outside (0, " << kMaxArgument << "]";
    throw Error(ErrorCode::Domain, msg.str());
  }
}

// Gamma(z) for z >= 0.5.
double lanczos_gamma(double z) {
  const double zm1 = z - 1.0;
  double sum = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) {
    sum += kLanczos[i] / (zm1 + static_cast<double>(i));
  }
  const double t = zm1 + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, zm1 + 0.5) * std::exp(-t) * sum;
}

} // namespace

double gamma(double z) {
  check_domain(z, "gamma");
  if (z < 0.5) {
    return lanczos_gamma(z + 1.0) / z;
  }
  return lanczos_gamma(z);
}

SpecialFnResult gamma_with_error(double z) {
  const double value = gamma(z);
  return {value, std::abs(value) * kGammaRelError};
}

double log_gamma(double z) {
  check_domain(z, "log_gamma");
  return std::log(gamma(z));
}

double digamma(double z) {
  check_domain(z, "digamma");
  double shift = 0.0;
  double x = z;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  // Bernoulli tail: sum_k B_{2k} / (2k x^{2k}), k = 1..7, Horner in 1/x^2.
  const double tail =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return shift + std::log(x) - 0.5 / x - tail;
}

SpecialFnResult digamma_with_error(double z) {
  return {digamma(z), kDigammaAbsError};
}

double gamma_weierstrass(double z, std::uint64_t terms) {
  check_domain(z, "gamma_weierstrass");
  if (terms < 1) {
    throw Error(ErrorCode::Parameter, "gamma_weierstrass: terms must be >= 1");
  }
  // log Gamma(z) = -gamma z - log z + sum_r [z/r - log(1 + z/r)]
  // Kahan summation: the tail terms are ~z^2/(2 r^2) and would otherwise be lost.
  double sum = 0.0;
  double carry = 0.0;
  for (std::uint64_t r = terms; r >= 1; --r) {
    const double x = z / static_cast<double>(r);
    const double term = x - std::log1p(x);
    const double y = term - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return std::exp(-kEulerGamma * z - std::log(z) + sum);
}

} // namespace fcl::specialfn
