#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "losses.hpp"
#include "random.hpp"
#include "specialfn.hpp"

namespace fcl::verify {

namespace {

using losses::LossKind;
using losses::LossSpec;

const std::vector<double> kProbGrid = {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
const std::vector<double> kMuGrid = {0.0, 0.25, 0.5, 0.75, 0.95};
constexpr std::size_t kGridClasses = 4;
constexpr std::size_t kGridLabel = 1;

// Target mass p_y at kGridLabel; the rest split 1:2:3 across the other classes.
std::vector<double> grid_vector(double py) {
  std::vector<double> p(kGridClasses);
  const double rest = 1.0 - py;
  double w = 1.0;
  for (std::size_t k = 0; k < kGridClasses; ++k) {
    if (k == kGridLabel) {
      p[k] = py;
    } else {
      p[k] = rest * w / 6.0;
      w += 1.0;
    }
  }
  return p;
}

// Random simplex point (normalized exponentials) with K in [2, 10].
std::vector<double> random_simplex(Rng& rng) {
  const std::size_t K = 2 + static_cast<std::size_t>(index_draw(rng, 9));
  std::vector<double> p(K);
  double sum = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - unit_draw(rng));
    sum += v;
  }
  for (double& v : p) {
    v /= sum;
  }
  return p;
}

struct NamedLoss {
  std::string name;
  LossSpec spec;
};

std::vector<NamedLoss> gradient_suite(double mu) {
  auto make = [&](LossKind kind) {
    LossSpec s;
    s.kind = kind;
    s.mu = mu;
    return s;
  };
  std::vector<NamedLoss> out = {
      {"ce", make(LossKind::CE)},   {"mae", make(LossKind::MAE)}, {"gce", make(LossKind::GCE)},
      {"rce", make(LossKind::RCE)}, {"nce", make(LossKind::NCE)}, {"sce", make(LossKind::SCE)},
      {"fce", make(LossKind::FCE)}, {"fcl", make(LossKind::FCL)}};
  LossSpec nce_mae = make(LossKind::APL);
  nce_mae.active = LossKind::NCE;
  nce_mae.passive = LossKind::MAE;
  out.push_back({"nce+mae", nce_mae});
  LossSpec nce_rce = nce_mae;
  nce_rce.passive = LossKind::RCE;
  out.push_back({"nce+rce", nce_rce});
  return out;
}

CheckResult finish(std::string name, double max_error, double tol, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.max_error = max_error;
  r.tolerance = tol;
  r.passed = std::isfinite(max_error) && max_error <= tol;
  r.detail = std::move(detail);
  return r;
}

CheckResult check_degeneracy(double mu) {
  Rng rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_simplex(rng);
    const std::size_t y = static_cast<std::size_t>(index_draw(rng, p.size()));
    const double fcl = losses::fcl(p, y, mu).value;
    const double mae = losses::mae(p, y).value;
    const double expected = mu == 0.0 ? losses::ce(p, y).value + mae : mae + 1.0;
    worst = std::max(worst, std::abs(fcl - expected));
  }
  return finish(mu == 0.0 ? "degeneracy: fcl(mu=0) = ce + mae" : "degeneracy: fcl(mu=1) = mae + 1",
                worst, 1e-12, "1000 random simplex points");
}

CheckResult check_grad_p(const VerifyOptions& opt) {
  const double h = opt.fd_step;
  const double sign = opt.inject_grad_sign_fault ? -1.0 : 1.0;
  double worst = 0.0;
  std::string where;
  for (double mu : kMuGrid) {
    for (const auto& loss : gradient_suite(mu)) {
      for (double py : kProbGrid) {
        const auto p = grid_vector(py);
        const auto eval = losses::evaluate(loss.spec, p, kGridLabel);
        for (std::size_t k = 0; k < p.size(); ++k) {
          auto plus = p;
          auto minus = p;
          plus[k] += h;
          minus[k] -= h;
          const double fd = (losses::evaluate(loss.spec, plus, kGridLabel).value -
                             losses::evaluate(loss.spec, minus, kGridLabel).value) /
                            (2.0 * h);
          const double err = mixed_relative_error(sign * eval.grad_p[k], fd);
          if (err > worst) {
            worst = err;
            std::ostringstream w;
            w << loss.name << " p_y=" << py << " mu=" << mu << " k=" << k;
            where = w.str();
          }
        }
      }
    }
  }
  return finish("gradient: d loss / d p vs central differences", worst, 1e-6, "worst at " + where);
}

CheckResult check_grad_mu(const VerifyOptions& opt) {
  const double h = opt.fd_step;
  const double sign = opt.inject_grad_sign_fault ? -1.0 : 1.0;
  double worst = 0.0;
  std::string where;
  for (LossKind kind : {LossKind::FCE, LossKind::FCL}) {
    for (double mu = 0.05; mu <= 0.95 + 1e-12; mu += 0.05) {
      for (double py : kProbGrid) {
        const auto p = grid_vector(py);
        LossSpec s;
        s.kind = kind;
        s.mu = mu;
        const double analytic = sign * losses::evaluate(s, p, kGridLabel).grad_mu;
        s.mu = mu + h;
        const double up = losses::evaluate(s, p, kGridLabel).value;
        s.mu = mu - h;
        const double down = losses::evaluate(s, p, kGridLabel).value;
        const double err = mixed_relative_error(analytic, (up - down) / (2.0 * h));
        if (err > worst) {
          worst = err;
          std::ostringstream w;
          w << losses::to_string(kind) << " p_y=" << py << " mu=" << mu;
          where = w.str();
        }
      }
    }
  }
  return finish("gradient: d loss / d mu vs central differences", worst, 1e-6, "worst at " + where);
}

CheckResult check_rce_mae() {
  // Dyadic simplex points: every partial sum is exact, so the identity is bitwise.
  Rng rng(7);
  constexpr double kScale = 1048576.0;  // 2^20
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = 2 + static_cast<std::size_t>(index_draw(rng, 9));
    std::vector<double> counts(K);
    std::uint64_t left = static_cast<std::uint64_t>(kScale);
    for (std::size_t k = 0; k + 1 < K; ++k) {
      counts[k] = static_cast<double>(index_draw(rng, left + 1));
      left -= static_cast<std::uint64_t>(counts[k]);
    }
    counts[K - 1] = static_cast<double>(left);
    std::vector<double> p(K);
    for (std::size_t k = 0; k < K; ++k) {
      p[k] = counts[k] / kScale;
    }
    const std::size_t y = static_cast<std::size_t>(index_draw(rng, K));
    const double A = -(0.5 + 10.0 * unit_draw(rng));
    const double rce = losses::rce(p, y, A).value;
    const double scaled = (-A / 2.0) * losses::mae(p, y).value;
    if (rce != scaled) {
      ++mismatches;
      worst = std::max(worst, std::abs(rce - scaled));
    }
  }
  return finish("identity: rce = (-A/2) mae", worst, 0.0,
                std::to_string(mismatches) + " mismatches over 1000 dyadic simplex points");
}

CheckResult check_beta_roundtrip() {
  double worst = 0.0;
  for (double mu = 0.0; mu <= 1.0 + 1e-12; mu += 0.05) {
    const double m = std::min(mu, 1.0);
    for (double py : kProbGrid) {
      for (double A : {-6.0, -4.0, -1.0}) {
        const double beta = losses::beta_equivalent(m, py, A);
        const double u = -std::log(py);
        const double lhs = -2.0 / (A * beta);
        const double rhs = 1.0 / (specialfn::gamma(2.0 - m) * std::pow(u, m));
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  return finish("identity: beta_equivalent round trip", worst, 1e-12);
}

CheckResult check_attenuation() {
  const std::vector<double> mus = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto p = grid_vector(0.01);
  double prev = INFINITY;
  double worst = 0.0;
  bool ok = true;
  for (double mu : mus) {
    const double g = std::abs(losses::fcl(p, kGridLabel, mu).grad_p[kGridLabel]);
    if (!(g < prev)) {
      ok = false;
      worst = std::max(worst, g - prev);
    }
    prev = g;
  }
  auto r = finish("attenuation: |d fcl / d p_y| decreasing in mu at p_y = 0.01", worst, 0.0);
  r.passed = ok;
  return r;
}

CheckResult check_factorials() {
  double worst = 0.0;
  double fact = 1.0;
  for (int n = 0; n <= 10; ++n) {
    if (n > 0) fact *= n;
    worst = std::max(worst, std::abs(specialfn::gamma(n + 1.0) - fact) / fact);
  }
  return finish("gamma(n+1) = n!, n = 0..10 (relative)", worst, 1e-11);
}

CheckResult check_digamma_one() {
  return finish("digamma(1) = -euler_gamma", std::abs(specialfn::digamma(1.0) + specialfn::kEulerGamma),
                1e-10);
}

CheckResult check_weierstrass(const VerifyOptions& opt) {
  double worst = 0.0;
  for (double z : {0.7, 1.3, 1.5, 1.9}) {
    worst = std::max(worst, std::abs(specialfn::gamma_weierstrass(z, opt.weierstrass_terms) -
                                     specialfn::gamma(z)));
  }
  return finish("gamma vs Weierstrass product (" + std::to_string(opt.weierstrass_terms) + " terms)",
                worst, 1e-5);
}

CheckResult check_recurrences() {
  double worst_gamma = 0.0;
  double worst_psi = 0.0;
  for (double z = 0.5; z <= 10.0 + 1e-12; z += 0.125) {
    const double g = specialfn::gamma(z);
    worst_gamma = std::max(worst_gamma, std::abs(specialfn::gamma(z + 1.0) - z * g) / std::abs(z * g));
    worst_psi = std::max(worst_psi, std::abs(specialfn::digamma(z + 1.0) - specialfn::digamma(z) - 1.0 / z));
  }
  std::ostringstream d;
  d << "digamma recurrence max abs error " << worst_psi << " (tol 1e-9)";
  auto r = finish("recurrences: gamma(z+1) = z gamma(z), psi(z+1) = psi(z) + 1/z", worst_gamma, 1e-11,
                  d.str());
  r.passed = r.passed && worst_psi <= 1e-9;
  return r;
}

} // namespace

double mixed_relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<CheckResult> run_group(CheckGroup group, const VerifyOptions& options) {
  switch (group) {
    case CheckGroup::Degeneracy:
      return {check_degeneracy(0.0), check_degeneracy(1.0)};
    case CheckGroup::Gradients:
      return {check_grad_p(options), check_grad_mu(options)};
    case CheckGroup::Identities:
      return {check_rce_mae(), check_beta_roundtrip()};
    case CheckGroup::Properties:
      return {check_attenuation()};
    case CheckGroup::SpecialFunctions:
      return {check_factorials(), check_digamma_one(), check_recurrences(), check_weierstrass(options)};
  }
  return {};
}

std::vector<CheckResult> run_checks(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  for (CheckGroup g : {CheckGroup::Degeneracy, CheckGroup::Gradients, CheckGroup::Identities,
                       CheckGroup::Properties, CheckGroup::SpecialFunctions}) {
    const auto part = run_group(g, options);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

} // namespace fcl::verify
