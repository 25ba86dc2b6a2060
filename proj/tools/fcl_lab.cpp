// fcl-lab: command-line front end. Talks to the library only through fcl/fcl.h.
#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "fcl/fcl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ConfigDeleter {
  void operator()(fcl_config* c) const { fcl_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<fcl_config, ConfigDeleter>;

int report_error(const char* what, fcl_status status) {
  std::cerr << "fcl-lab: " << what << ": " << fcl_last_error() << " (" << fcl_status_name(status)
            << ")\n";
  switch (status) {
  case FCL_ERR_CONFIG:
  case FCL_ERR_PARAMETER:
  case FCL_ERR_DOMAIN:
  case FCL_ERR_NULL_ARGUMENT:
    return kExitUsage;
  default:
    return kExitFailure;
  }
}

// Loads the config file (or an empty one) and applies --set overrides.
int load_config(const std::string& path, const std::vector<std::string>& overrides, ConfigPtr& out) {
  fcl_config* raw = nullptr;
  const fcl_status st = path.empty() ? fcl_config_parse("", &raw) : fcl_config_load(path.c_str(), &raw);
  if (st != FCL_OK) {
    report_error("cannot load config", st);
    return kExitUsage;
  }
  out.reset(raw);
  for (const auto& o : overrides) {
    const fcl_status s = fcl_config_override(out.get(), o.c_str());
    if (s != FCL_OK) {
      report_error("bad override", s);
      return kExitUsage;
    }
  }
  const fcl_status v = fcl_config_validate(out.get());
  if (v != FCL_OK) {
    report_error("invalid config", v);
    return kExitUsage;
  }
  return kExitOk;
}

std::string config_value(const fcl_config* cfg, const char* key) {
  std::size_t needed = 0;
  if (fcl_config_get(cfg, key, nullptr, 0, &needed) != FCL_OK) {
    return {};
  }
  std::string value(needed + 1, '\0');
  fcl_config_get(cfg, key, value.data(), value.size(), &needed);
  value.resize(needed);
  return value;
}

// --output, then output.dir from the config, then $FCL_OUTPUT_DIR, then ./runs.
std::string resolve_output_dir(const std::string& flag, const fcl_config* cfg) {
  if (!flag.empty()) return flag;
  std::string from_cfg = config_value(cfg, "output.dir");
  if (!from_cfg.empty()) return from_cfg;
  if (const char* env = std::getenv("FCL_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "runs";
}

std::string fmt_acc(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  ConfigPtr cfg;
  if (int rc = load_config(a.config, a.overrides, cfg); rc != kExitOk) return rc;
  const std::string out_dir = resolve_output_dir(a.output, cfg.get());
  fcl_run_record* rec = nullptr;
  const fcl_status st = fcl_train(cfg.get(), out_dir.c_str(), &rec);
  if (st != FCL_OK) return report_error("training failed", st);
  const std::size_t epochs = fcl_run_record_epochs(rec);
  if (!a.quiet) {
    for (std::size_t i = 0; i < epochs; ++i) {
      fcl_epoch_row row{};
      fcl_run_record_row(rec, i, &row);
      std::printf("epoch %3zu  loss %.5f  train %.4f  val %.4f  test %s  mu %.4f  lr %.2e\n", row.epoch,
                  row.mean_train_loss, row.train_acc, row.val_acc,
                  row.has_test_acc ? fmt_acc(row.test_acc).c_str() : "-", row.mu, row.lr);
    }
  }
  std::printf("run %s written to %s\n", fcl_run_record_id(rec), fcl_run_record_dir(rec));
  fcl_run_record_destroy(rec);
  return kExitOk;
}

struct SweepArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  std::vector<double> etas{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<std::string> losses{"ce", "fcl"};
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 1;
};

int cmd_sweep(const SweepArgs& a) {
  ConfigPtr cfg;
  if (int rc = load_config(a.config, a.overrides, cfg); rc != kExitOk) return rc;
  const std::string out_dir = resolve_output_dir(a.output, cfg.get());
  std::vector<const char*> loss_ptrs;
  for (const auto& l : a.losses) loss_ptrs.push_back(l.c_str());
  fcl_sweep_result* res = nullptr;
  const fcl_status st =
      fcl_sweep(cfg.get(), a.etas.data(), a.etas.size(), loss_ptrs.data(), loss_ptrs.size(),
                a.seeds.empty() ? nullptr : a.seeds.data(), a.seeds.size(), a.jobs, out_dir.c_str(), &res);
  if (st != FCL_OK) return report_error("sweep failed", st);
  std::size_t failed = 0;
  const std::size_t n = fcl_sweep_cell_count(res);
  for (std::size_t i = 0; i < n; ++i) {
    fcl_sweep_cell c{};
    fcl_sweep_get_cell(res, i, &c);
    if (c.ok) {
      std::printf("%-10s eta=%.2f seed=%-4llu val %s  test %s  mu %.4f\n", c.loss, c.eta,
                  static_cast<unsigned long long>(c.seed), fmt_acc(c.final_val_acc).c_str(),
                  fmt_acc(c.final_test_acc).c_str(), c.final_mu);
    } else {
      ++failed;
      std::printf("%-10s eta=%.2f seed=%-4llu FAILED: %s\n", c.loss, c.eta,
                  static_cast<unsigned long long>(c.seed), c.error);
    }
  }
  std::printf("%zu runs, %zu failed; summary in %s/summary.csv\n", n, failed, out_dir.c_str());
  fcl_sweep_result_destroy(res);
  return failed == 0 ? kExitOk : kExitFailure;
}

struct VerifyArgs {
  std::uint64_t terms = 0;
  double fd_step = 0.0;
  bool inject_fault = false;
};

int cmd_verify(const VerifyArgs& a) {
  fcl_verify_options opt;
  fcl_verify_options_default(&opt);
  if (a.terms > 0) opt.weierstrass_terms = a.terms;
  if (a.fd_step > 0.0) opt.fd_step = a.fd_step;
  opt.inject_grad_sign_fault = a.inject_fault ? 1 : 0;
  fcl_verify_report* rep = nullptr;
  const fcl_status st = fcl_verify(&opt, &rep);
  if (st != FCL_OK) return report_error("verify failed", st);
  const std::size_t n = fcl_verify_check_count(rep);
  for (std::size_t i = 0; i < n; ++i) {
    fcl_verify_check c{};
    fcl_verify_get_check(rep, i, &c);
    std::printf("%s  %-28s max_err %.3e  tol %.1e  %s\n", c.passed ? "PASS" : "FAIL", c.name, c.max_error,
                c.tolerance, c.detail);
  }
  const bool ok = fcl_verify_all_passed(rep) != 0;
  fcl_verify_report_destroy(rep);
  std::printf("%s\n", ok ? "all checks passed" : "some checks FAILED");
  return ok ? kExitOk : kExitFailure;
}

struct NoisifyArgs {
  std::string input;
  std::string output;
  std::string report;
  std::string kind = "symmetric";
  double eta = 0.0;
  std::string pairs = "mnist";
  std::size_t superclass_size = 5;
  std::uint64_t seed = 1;
  std::size_t classes = 0;
};

int cmd_noisify(const NoisifyArgs& a) {
  fcl_noise_spec spec{};
  if (a.kind == "none") spec.kind = FCL_NOISE_NONE;
  else if (a.kind == "symmetric") spec.kind = FCL_NOISE_SYMMETRIC;
  else if (a.kind == "asymmetric") spec.kind = FCL_NOISE_ASYMMETRIC;
  else spec.kind = FCL_NOISE_CIRCULAR;
  spec.eta = a.eta;
  spec.pair_map = a.pairs.c_str();
  spec.superclass_size = a.superclass_size;
  spec.seed = a.seed;
  spec.num_classes = a.classes;
  const std::string report = a.report.empty() ? a.output + ".flips.json" : a.report;
  const fcl_status st = fcl_noisify_file(&spec, a.input.c_str(), a.output.c_str(), report.c_str());
  if (st != FCL_OK) return report_error("noisify failed", st);
  std::printf("wrote %s and %s\n", a.output.c_str(), report.c_str());
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string output = "report.csv";
};

int cmd_report(const ReportArgs& a) {
  std::vector<const char*> ptrs;
  for (const auto& d : a.dirs) ptrs.push_back(d.c_str());
  std::size_t runs = 0;
  std::size_t failed = 0;
  const fcl_status st = fcl_report(ptrs.data(), ptrs.size(), a.output.c_str(), &runs, &failed);
  if (st == FCL_ERR_FORMAT && runs + failed > 0) {
    std::cerr << "fcl-lab: unreadable runs:\n" << fcl_last_error() << "\n";
  } else if (st != FCL_OK) {
    return report_error("report failed", st);
  }
  std::printf("%zu runs written to %s, %zu failed\n", runs, a.output.c_str(), failed);
  return failed == 0 ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"fcl-lab: fractional classification loss experiments"};
  app.set_version_flag("--version", fcl_version());
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write its run record");
  train_cmd->add_option("-c,--config", train.config, "Config file");
  train_cmd->add_option("-s,--set", train.overrides, "Override a config key (key=value)");
  train_cmd->add_option("-o,--output", train.output, "Output directory (default $FCL_OUTPUT_DIR or ./runs)");
  train_cmd->add_flag("-q,--quiet", train.quiet, "Only print the final line");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train a grid of losses x noise rates x seeds");
  sweep_cmd->add_option("-c,--config", sweep.config, "Base config file");
  sweep_cmd->add_option("-s,--set", sweep.overrides, "Override a config key (key=value)");
  sweep_cmd->add_option("-o,--output", sweep.output, "Output directory");
  sweep_cmd->add_option("--etas", sweep.etas, "Noise rates")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--losses", sweep.losses, "Loss names, e.g. ce,gce,nce+rce,fcl")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Master seeds (default: config seed)")->delimiter(',');
  sweep_cmd->add_option("-j,--jobs", sweep.jobs, "Parallel runs")->check(CLI::PositiveNumber);

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the numerical self-checks");
  verify_cmd->add_option("--terms", verify.terms, "Weierstrass product terms");
  verify_cmd->add_option("--fd-step", verify.fd_step, "Central-difference step");
  verify_cmd->add_flag("--inject-fault", verify.inject_fault, "Flip a gradient sign to test the checker");

  NoisifyArgs noisify;
  auto* noisify_cmd = app.add_subcommand("noisify", "Corrupt a label file");
  noisify_cmd->add_option("input", noisify.input, "Input labels (IDX1, .txt or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  noisify_cmd->add_option("output", noisify.output, "Output labels")->required();
  noisify_cmd->add_option("--report", noisify.report, "Flip report path (default <output>.flips.json)");
  noisify_cmd->add_option("--kind", noisify.kind, "Noise kind")
      ->check(CLI::IsMember({"none", "symmetric", "asymmetric", "circular"}))
      ->capture_default_str();
  noisify_cmd->add_option("--eta", noisify.eta, "Noise rate")->check(CLI::Range(0.0, 1.0));
  noisify_cmd->add_option("--pairs", noisify.pairs, "Preset (mnist, cifar10) or pair list like 7:1,5<>6")
      ->capture_default_str();
  noisify_cmd->add_option("--superclass-size", noisify.superclass_size, "Block size for circular noise")
      ->capture_default_str();
  noisify_cmd->add_option("--seed", noisify.seed, "Noise seed")->capture_default_str();
  noisify_cmd->add_option("--classes", noisify.classes, "Number of classes (default max label + 1)");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Collect run records into long-format plot data");
  report_cmd->add_option("dirs", report.dirs, "Run directories or sweep directories")->required();
  report_cmd->add_option("-o,--output", report.output, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (*train_cmd) return cmd_train(train);
  if (*sweep_cmd) return cmd_sweep(sweep);
  if (*verify_cmd) return cmd_verify(verify);
  if (*noisify_cmd) return cmd_noisify(noisify);
  if (*report_cmd) return cmd_report(report);
  return kExitUsage;
}
