// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "experiment.hpp"
#include "losses.hpp"
#include "net.hpp"
#include "noise.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;
using namespace fcl;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;  // 0: no runtime limit
  std::function<Outcome()> body;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

Outcome from_checks(const std::vector<verify::CheckResult>& checks) {
  Outcome out{verify::all_passed(checks), ""};
  for (const auto& c : checks) {
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += c.name + " err=" + fmt(c.max_error, 3) + (c.passed ? "" : " FAILED");
  }
  return out;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

// Shared between criteria 7 to 9.
experiment::SweepResult g_mu_sweep, g_robust_sweep;

const experiment::RunRecord& find(const experiment::SweepResult& r, const std::string& loss, double eta,
                                  std::uint64_t seed) {
  for (const auto& c : r.cells)
    if (c.loss == loss && c.eta == eta && c.seed == seed) {
      if (!c.record) throw std::runtime_error("run " + c.run_id + " failed: " + c.error);
      return *c.record;
    }
  throw std::runtime_error("missing sweep cell");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

experiment::ExperimentConfig blob_base() {
  experiment::ExperimentConfig cfg;  // N=5000, K=4, d=10, 40 epochs, mu0=0.5, lr_mu=0.1, freeze 5
  cfg.noise.kind = noise::NoiseKind::Symmetric;
  cfg.eval_test = true;
  cfg.save_model = false;
  return cfg;
}

Outcome c5_end_to_end() {
  double worst = 0.0;
  for (double mu : {0.0, 0.5, 1.0}) {
    net::MlpModel m({5, 7, 6, 3}, 11);
    const std::vector<double> x = {0.3, -1.2, 0.8, 0.05, 1.7};
    const std::size_t y = 1;
    auto loss_at = [&] { return losses::fcl(net::forward(m, x), y, mu).value; };
    const auto g = net::backward(m, x, losses::fcl(net::forward(m, x), y, mu).grad_p);
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      auto probe = [&](double& param, double analytic) {
        const double p0 = param;
        param = p0 + h;
        const double up = loss_at();
        param = p0 - h;
        const double down = loss_at();
        param = p0;
        worst = std::max(worst, verify::mixed_relative_error(analytic, (up - down) / (2 * h)));
      };
      auto& layer = m.layers()[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
        probe(layer.weight.data()[i], g.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias(i), g.layers[l].bias(i));
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt(worst, 3) + " over all parameters, mu in {0, 0.5, 1}"};
}

Outcome c6_noise() {
  const std::size_t K = 10, N = 100000;
  std::vector<noise::Label> y(N);
  for (std::size_t i = 0; i < N; ++i) y[i] = static_cast<noise::Label>(i % K);
  const auto r = noise::corrupt_symmetric(y, K, 0.6, 2024);
  std::vector<double> dest(K, 0.0);
  std::size_t flipped = 0;
  bool mask_ok = true;
  for (std::size_t i = 0; i < N; ++i) {
    mask_ok = mask_ok && r.flipped[i] == (r.labels[i] != y[i]);
    if (r.flipped[i]) {
      dest[r.labels[i]] += 1.0;
      ++flipped;
    }
  }
  const double frac = static_cast<double>(flipped) / N;
  const double e = static_cast<double>(flipped) / K;
  double chi2 = 0.0;
  for (double c : dest) chi2 += (c - e) * (c - e) / e;
  const boost::math::chi_squared dist(static_cast<double>(K - 1));
  const double critical = boost::math::quantile(boost::math::complement(dist, 0.001));

  const auto map = noise::preset_pair_map("mnist");
  std::set<noise::Label> sources;
  for (const auto& p : map) sources.insert(p.from);
  const auto a = noise::corrupt_asymmetric(y, K, map, 0.6, 7);
  std::set<noise::Label> flipped_from;
  bool targets_ok = true;
  for (std::size_t i = 0; i < N; ++i) {
    if (a.labels[i] == y[i]) continue;
    flipped_from.insert(y[i]);
    targets_ok = targets_ok && std::any_of(map.begin(), map.end(), [&](const noise::PairMapEntry& p) {
                   return p.from == y[i] && p.to == a.labels[i];
                 });
  }
  const bool ok = std::abs(frac - 0.6) <= 0.01 && chi2 < critical && mask_ok && flipped_from == sources &&
                  targets_ok;
  return {ok, "flip fraction " + fmt(frac) + ", destination chi2 " + fmt(chi2) + " < " + fmt(critical) +
                  ", asymmetric sources " + std::to_string(flipped_from.size()) + "/" +
                  std::to_string(sources.size()) + (targets_ok ? "" : ", unmapped target seen")};
}

Outcome c7_mu_ordering() {
  const std::vector<double> etas = {0.0, 0.4, 0.8};
  g_mu_sweep = experiment::sweep(blob_base(), etas, {"fcl"}, kSeeds, jobs());
  std::vector<double> med;
  for (double eta : etas) {
    std::vector<double> finals;
    for (auto s : kSeeds) finals.push_back(find(g_mu_sweep, "fcl", eta, s).rows.back().mu);
    med.push_back(median(finals));
  }
  const double mu0 = blob_base().mu.mu0;
  const bool ok = med[0] < med[1] && med[1] < med[2] && med[2] > mu0;
  return {ok, "median final mu " + fmt(med[0]) + " < " + fmt(med[1]) + " < " + fmt(med[2]) +
                  ", mu(0) = " + fmt(mu0)};
}

Outcome c8_robustness() {
  g_robust_sweep = experiment::sweep(blob_base(), {0.0, 0.6}, {"ce", "fcl"}, kSeeds, jobs());
  auto acc = [&](const std::string& loss, double eta, std::uint64_t s) {
    return *find(g_robust_sweep, loss, eta, s).rows.back().test_acc;
  };
  int wins = 0;
  double deg_fcl = 0.0, deg_ce = 0.0;
  for (auto s : kSeeds) {
    if (acc("fcl", 0.6, s) >= acc("ce", 0.6, s)) ++wins;
    deg_fcl += (acc("fcl", 0.0, s) - acc("fcl", 0.6, s)) / kSeeds.size();
    deg_ce += (acc("ce", 0.0, s) - acc("ce", 0.6, s)) / kSeeds.size();
  }
  const bool ok = wins >= 2 && deg_fcl < deg_ce && deg_fcl <= 0.02;
  return {ok, "FCL >= CE at eta 0.6 in " + std::to_string(wins) + "/3 seeds, mean degradation FCL " +
                  fmt(100 * deg_fcl, 3) + " vs CE " + fmt(100 * deg_ce, 3) + " points"};
}

Outcome c9_freeze() {
  std::size_t runs = 0;
  bool ok = true;
  std::string bad;
  for (const auto* sweep : {&g_mu_sweep, &g_robust_sweep}) {
    for (const auto& c : sweep->cells) {
      if (c.loss != "fcl") continue;
      if (!c.record || c.record->rows.size() < 5) {
        ok = false;
        bad = c.run_id;
        continue;
      }
      ++runs;
      const auto& rows = c.record->rows;
      for (std::size_t e = 1; e < 5; ++e)
        if (rows[e].mu != rows[0].mu) {
          ok = false;
          bad = c.run_id;
        }
    }
  }
  if (runs == 0) return {false, "no FCL runs available"};
  return {ok, std::to_string(runs) + " FCL runs checked" + (bad.empty() ? "" : ", violation in " + bad)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c10_determinism() {
  const fs::path root = fs::temp_directory_path() / ("fcl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = "'" FCL_LAB_PATH "' train -q -s noise.kind=symmetric -s noise.eta=0.4 -o '" +
                            out.string() + "' > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove_all(root);
      return {false, "fcl-lab train failed"};
    }
    for (const auto& entry : fs::directory_iterator(out)) csv[i] = read_file(entry.path() / "run.csv");
  }
  fs::remove_all(root);
  const bool ok = !csv[0].empty() && csv[0] == csv[1];
  return {ok, std::to_string(csv[0].size()) + " bytes, " + (ok ? "identical" : "different")};
}

}  // namespace

int main() {
  using verify::CheckGroup;
  const std::vector<Criterion> criteria = {
      {1, "degeneracy at mu = 0 and mu = 1", 1.0,
       [] { return from_checks(verify::run_group(CheckGroup::Degeneracy)); }},
      {2, "loss gradients vs finite differences", 1.0,
       [] { return from_checks(verify::run_group(CheckGroup::Gradients)); }},
      {3, "special functions", 10.0,
       [] { return from_checks(verify::run_group(CheckGroup::SpecialFunctions)); }},
      {4, "algebraic identities", 1.0,
       [] { return from_checks(verify::run_group(CheckGroup::Identities)); }},
      {5, "end-to-end network gradient", 5.0, c5_end_to_end},
      {6, "noise statistics", 5.0, c6_noise},
      {7, "adaptive mu ordering", 300.0, c7_mu_ordering},
      {8, "robustness at eta = 0.6", 300.0, c8_robustness},
      {9, "mu freeze for the first 5 epochs", 0.0, c9_freeze},
      {10, "deterministic train output", 0.0, c10_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      out.passed = false;
      out.detail += " (over the " + fmt(c.limit_s) + " s limit)";
    }
    if (!out.passed) ++failures;
    std::printf("%s  %2d  %-36s %8.2fs  %s\n", out.passed ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
