#pragma once

#include <cstdint>

namespace fcl::specialfn {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

struct SpecialFnResult {
  double value = 0.0;
  double absolute_error_bound = 0.0;
};

/// Gamma function on (0, 20] via a Lanczos approximation. Relative error is
/// below 1e-14 on [0.5, 20]. Throws Error(Domain) for z <= 0 or z > 20.
double gamma(double z);
SpecialFnResult gamma_with_error(double z);

/// log Gamma(z) on the same domain.
double log_gamma(double z);

/// Digamma (psi) function: recurrence up to z >= 10, then the asymptotic
/// Bernoulli series. Absolute error below 1e-14 on [0.5, 20].
double digamma(double z);
SpecialFnResult digamma_with_error(double z);

// Truncated Weierstrass product
//   e^{-gamma z} / z * prod_{r=1}^{terms} (1 + z/r)^{-1} e^{z/r}
// evaluated in log space. Converges like O(z^2 / terms); only meant as an
// independent oracle for gamma().
double gamma_weierstrass(double z, std::uint64_t terms);

} // namespace fcl::specialfn
