#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"
#include "specialfn.hpp"

namespace fcl::losses {

namespace {

void check_label(std::span<const double> p, std::size_t y) {
  if (p.empty()) {
    throw Error(ErrorCode::Parameter, "probability vector is empty");
  }
  if (y >= p.size()) {
    std::ostringstream msg;
    msg << "label " << y << " out of range for K = " << p.size();
    throw Error(ErrorCode::Parameter, msg.str());
  }
}

void check_mu(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    std::ostringstream msg;
    msg << "mu = " << mu << " outside [0, 1]";
    throw Error(ErrorCode::Domain, msg.str());
  }
}

void check_q(double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    std::ostringstream msg;
    msg << "GCE q = " << q << " outside (0, 1]";
    throw Error(ErrorCode::Parameter, msg.str());
  }
}

void check_A(double A) {
  if (!(A < 0.0) || !std::isfinite(A)) {
    std::ostringstream msg;
    msg << "RCE constant A = " << A << " must be negative";
    throw Error(ErrorCode::Parameter, msg.str());
  }
}

double ce_into(std::span<const double> p, std::size_t y, std::span<double> g) {
  const double py = clamp_prob(p[y]);
  std::fill(g.begin(), g.end(), 0.0);
  g[y] = -1.0 / py;
  return -std::log(py);
}

double mae_value(std::span<const double> p, std::size_t y) {
  double off_target = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != y) {
      off_target += p[k];
    }
  }
  return (1.0 - p[y]) + off_target;
}

// Per-element convention: d/dp_y = -1, d/dp_k = +1 for k != y.
double mae_into(std::span<const double> p, std::size_t y, std::span<double> g) {
  std::fill(g.begin(), g.end(), 1.0);
  g[y] = -1.0;
  return mae_value(p, y);
}

double gce_into(std::span<const double> p, std::size_t y, double q, std::span<double> g) {
  const double py = clamp_prob(p[y]);
  const double log_py = std::log(py);
  std::fill(g.begin(), g.end(), 0.0);
  g[y] = -std::exp((q - 1.0) * log_py);
  // (1 - p^q) / q without cancellation as q -> 0.
  return -std::expm1(q * log_py) / q;
}

// -sum_k p_k log q_k with log 0 := A; only the off-target mass contributes.
double rce_into(std::span<const double> p, std::size_t y, double A, std::span<double> g) {
  double off_target = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != y) {
      off_target += p[k];
      g[k] = -A;
    }
  }
  g[y] = 0.0;
  return -A * off_target;
}

double nce_into(std::span<const double> p, std::size_t y, std::span<double> g) {
  double denom = 0.0;
  for (double pk : p) {
    denom -= std::log(clamp_prob(pk));
  }
  const double py = clamp_prob(p[y]);
  const double numer = -std::log(py);
  const double value = numer / denom;
  const double inv_denom2 = 1.0 / (denom * denom);
  for (std::size_t k = 0; k < p.size(); ++k) {
    // d denom / d p_k = -1/p_k
    g[k] = numer * inv_denom2 / clamp_prob(p[k]);
  }
  g[y] += -1.0 / (py * denom);
  return value;
}

double fce_into(std::span<const double> p, std::size_t y, double mu, std::span<double> g,
                double* grad_mu) {
  const double py = clamp_prob(p[y]);
  const double u = -std::log(py);
  const double log_u = std::log(u);
  const double gamma = specialfn::gamma(2.0 - mu);
  // u^{1-mu} as exp((1 - mu) log u): underflows to 0 cleanly as u -> 0.
  const double value = std::exp((1.0 - mu) * log_u) / gamma;
  std::fill(g.begin(), g.end(), 0.0);
  g[y] = -(1.0 - mu) * std::exp(-mu * log_u) / (gamma * py);
  if (grad_mu != nullptr) {
    *grad_mu = value * (specialfn::digamma(2.0 - mu) - log_u);
  }
  return value;
}

double component_into(const LossSpec& spec, LossKind kind, std::span<const double> p,
                      std::size_t y, std::span<double> g, double* grad_mu) {
  if (grad_mu != nullptr) {
    *grad_mu = 0.0;
  }
  switch (kind) {
  case LossKind::CE:
    return ce_into(p, y, g);
  case LossKind::MAE:
    return mae_into(p, y, g);
  case LossKind::GCE:
    return gce_into(p, y, spec.q, g);
  case LossKind::RCE:
    return rce_into(p, y, spec.A, g);
  case LossKind::NCE:
    return nce_into(p, y, g);
  case LossKind::FCE:
    return fce_into(p, y, spec.mu, g, grad_mu);
  case LossKind::FCL: {
    const double value = fce_into(p, y, spec.mu, g, grad_mu);
    for (std::size_t k = 0; k < p.size(); ++k) {
      g[k] += (k == y) ? -1.0 : 1.0;
    }
    return value + mae_value(p, y);
  }
  case LossKind::SCE:
  case LossKind::APL:
    break;
  }
  throw Error(ErrorCode::Parameter, "nested APL components are not supported");
}

double combine_into(const LossSpec& spec, LossKind active, LossKind passive, double alpha,
                    double beta, std::span<const double> p, std::size_t y, std::span<double> g,
                    double* grad_mu) {
  thread_local std::vector<double> passive_grad;
  passive_grad.assign(p.size(), 0.0);
  double active_mu = 0.0;
  double passive_mu = 0.0;
  const double active_value = component_into(spec, active, p, y, g, &active_mu);
  const double passive_value = component_into(spec, passive, p, y, passive_grad, &passive_mu);
  for (std::size_t k = 0; k < p.size(); ++k) {
    g[k] = alpha * g[k] + beta * passive_grad[k];
  }
  if (grad_mu != nullptr) {
    *grad_mu = alpha * active_mu + beta * passive_mu;
  }
  return alpha * active_value + beta * passive_value;
}

LossEval make_eval(std::span<const double> p) {
  LossEval eval;
  eval.grad_p.assign(p.size(), 0.0);
  return eval;
}

} // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
  case LossKind::CE: return "ce";
  case LossKind::MAE: return "mae";
  case LossKind::GCE: return "gce";
  case LossKind::RCE: return "rce";
  case LossKind::NCE: return "nce";
  case LossKind::SCE: return "sce";
  case LossKind::APL: return "apl";
  case LossKind::FCE: return "fce";
  case LossKind::FCL: return "fcl";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (LossKind kind : {LossKind::CE, LossKind::MAE, LossKind::GCE, LossKind::RCE, LossKind::NCE,
                        LossKind::SCE, LossKind::APL, LossKind::FCE, LossKind::FCL}) {
    if (lower == to_string(kind)) {
      return kind;
    }
  }
  throw Error(ErrorCode::Parameter, "unknown loss kind '" + std::string(name) + "'");
}

bool uses_mu(LossKind kind) {
  return kind == LossKind::FCE || kind == LossKind::FCL;
}

void validate(const LossSpec& spec) {
  auto check_component = [&](LossKind kind) {
    switch (kind) {
    case LossKind::GCE: check_q(spec.q); break;
    case LossKind::RCE: check_A(spec.A); break;
    case LossKind::FCE:
    case LossKind::FCL: check_mu(spec.mu); break;
    case LossKind::SCE:
    case LossKind::APL:
      throw Error(ErrorCode::Parameter, "APL components must be base losses");
    default: break;
    }
  };
  switch (spec.kind) {
  case LossKind::SCE:
    check_A(spec.A);
    break;
  case LossKind::APL:
    check_component(spec.active);
    check_component(spec.passive);
    break;
  default:
    check_component(spec.kind);
  }
  if (!std::isfinite(spec.alpha) || !std::isfinite(spec.beta)) {
    throw Error(ErrorCode::Parameter, "APL coefficients must be finite");
  }
}

LossEval ce(std::span<const double> p, std::size_t y) {
  check_label(p, y);
  LossEval e = make_eval(p);
  e.value = ce_into(p, y, e.grad_p);
  return e;
}

LossEval mae(std::span<const double> p, std::size_t y) {
  check_label(p, y);
  LossEval e = make_eval(p);
  e.value = mae_into(p, y, e.grad_p);
  return e;
}

LossEval gce(std::span<const double> p, std::size_t y, double q) {
  check_label(p, y);
  check_q(q);
  LossEval e = make_eval(p);
  e.value = gce_into(p, y, q, e.grad_p);
  return e;
}

LossEval rce(std::span<const double> p, std::size_t y, double A) {
  check_label(p, y);
  check_A(A);
  LossEval e = make_eval(p);
  e.value = rce_into(p, y, A, e.grad_p);
  return e;
}

LossEval nce(std::span<const double> p, std::size_t y) {
  check_label(p, y);
  LossEval e = make_eval(p);
  e.value = nce_into(p, y, e.grad_p);
  return e;
}

LossEval fce(std::span<const double> p, std::size_t y, double mu) {
  check_label(p, y);
  check_mu(mu);
  LossEval e = make_eval(p);
  e.value = fce_into(p, y, mu, e.grad_p, &e.grad_mu);
  return e;
}

LossEval fcl(std::span<const double> p, std::size_t y, double mu) {
  LossSpec spec;
  spec.kind = LossKind::FCL;
  spec.mu = mu;
  return evaluate(spec, p, y);
}

LossEval apl_combine(const LossSpec& active, const LossSpec& passive, double alpha, double beta,
                     std::span<const double> p, std::size_t y) {
  check_label(p, y);
  validate(active);
  validate(passive);
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error(ErrorCode::Parameter, "APL coefficients must be finite");
  }
  LossEval a = evaluate(active, p, y);
  LossEval b = evaluate(passive, p, y);
  LossEval out = make_eval(p);
  out.value = alpha * a.value + beta * b.value;
  for (std::size_t k = 0; k < p.size(); ++k) {
    out.grad_p[k] = alpha * a.grad_p[k] + beta * b.grad_p[k];
  }
  out.grad_mu = alpha * a.grad_mu + beta * b.grad_mu;
  return out;
}

double evaluate_into(const LossSpec& spec, std::span<const double> p, std::size_t y,
                     std::span<double> grad_p, double* grad_mu) {
  switch (spec.kind) {
  case LossKind::SCE:
    return combine_into(spec, LossKind::CE, LossKind::RCE, spec.alpha, spec.beta, p, y, grad_p,
                        grad_mu);
  case LossKind::APL:
    return combine_into(spec, spec.active, spec.passive, spec.alpha, spec.beta, p, y, grad_p,
                        grad_mu);
  default:
    return component_into(spec, spec.kind, p, y, grad_p, grad_mu);
  }
}

LossEval evaluate(const LossSpec& spec, std::span<const double> p, std::size_t y) {
  check_label(p, y);
  validate(spec);
  LossEval e = make_eval(p);
  e.value = evaluate_into(spec, p, y, e.grad_p, &e.grad_mu);
  return e;
}

double beta_equivalent(double mu, double p_true, double A) {
  check_mu(mu);
  check_A(A);
  const double u = -std::log(p_true);
  if (!(u > 0.0) || !std::isfinite(u)) {
    std::ostringstream msg;
    msg << "beta_equivalent: p_true = " << p_true << " gives u = -log p outside (0, inf)";
    throw Error(ErrorCode::Domain, msg.str());
  }
  return -2.0 * specialfn::gamma(2.0 - mu) * std::pow(u, mu) / A;
}

} // namespace fcl::losses
