#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fcl::losses {

// Probabilities are clamped to [eps, 1 - eps] before any logarithm. This
// bounds u = -log p_y to roughly [1e-7, 16.1].
inline constexpr double kProbEpsilon = 1e-7;

enum class LossKind { CE, MAE, GCE, RCE, NCE, SCE, APL, FCE, FCL };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// True for the fractional losses, whose value depends on mu.
bool uses_mu(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::FCL;
  double q = 0.7;      // GCE exponent, (0, 1]
  double alpha = 1.0;  // active weight (SCE / APL)
  double beta = 1.0;   // passive weight (SCE / APL)
  double A = -6.0;     // log 0 substitute for RCE, < 0
  double mu = 0.5;     // fractional order, [0, 1]
  LossKind active = LossKind::NCE;  // APL components
  LossKind passive = LossKind::MAE;
};

/// Throws Error(Parameter) for out-of-range parameters and Error(Domain) for mu outside [0, 1].
void validate(const LossSpec& spec);

struct LossEval {
  double value = 0.0;
  std::vector<double> grad_p;
  double grad_mu = 0.0;
};

inline double clamp_prob(double p) {
  return p < kProbEpsilon ? kProbEpsilon : (p > 1.0 - kProbEpsilon ? 1.0 - kProbEpsilon : p);
}

LossEval ce(std::span<const double> p, std::size_t y);
LossEval mae(std::span<const double> p, std::size_t y);
LossEval gce(std::span<const double> p, std::size_t y, double q);
LossEval rce(std::span<const double> p, std::size_t y, double A);
LossEval nce(std::span<const double> p, std::size_t y);
LossEval fce(std::span<const double> p, std::size_t y, double mu);
LossEval fcl(std::span<const double> p, std::size_t y, double mu);
LossEval apl_combine(const LossSpec& active, const LossSpec& passive, double alpha, double beta,
                     std::span<const double> p, std::size_t y);

/// Dispatch on spec.kind. SCE is APL(CE, RCE); APL uses spec.active / spec.passive.
LossEval evaluate(const LossSpec& spec, std::span<const double> p, std::size_t y);

/// Allocation-free variant for the training loop. grad_p must have p.size()
/// entries and is overwritten. Returns the value; writes d/dmu to *grad_mu.
double evaluate_into(const LossSpec& spec, std::span<const double> p, std::size_t y,
                     std::span<double> grad_p, double* grad_mu);

/// SCE beta that makes SCE(alpha = 1) match the CE weight of FCE at (mu, p_true),
/// i.e. the solution of -2 / (A beta) = 1 / (Gamma(2 - mu) u^mu) with u = -log p_true:
/// beta = -2 Gamma(2 - mu) u^mu / A, positive for A < 0.
double beta_equivalent(double mu, double p_true, double A);

} // namespace fcl::losses
