#include "fcl/fcl.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "losses.hpp"
#include "mu_adapter.hpp"
#include "net.hpp"
#include "noise.hpp"
#include "specialfn.hpp"
#include "verify.hpp"

struct fcl_mu_state {
  fcl::mu::MuState state;
};

struct fcl_dataset {
  fcl::data::Dataset ds;
};

struct fcl_model {
  fcl::net::MlpModel model;
};

struct fcl_config {
  fcl::config::Config cfg;
};

struct fcl_run_record {
  fcl::experiment::RunRecord record;
  std::string dir;
  std::string csv;
};

struct fcl_sweep_result {
  fcl::experiment::SweepResult result;
  std::string summary;
};

struct fcl_verify_report {
  std::vector<fcl::verify::CheckResult> checks;
};

namespace {

thread_local std::string g_last_error;

fcl_status to_status(fcl::ErrorCode code) {
  switch (code) {
  case fcl::ErrorCode::Domain: return FCL_ERR_DOMAIN;
  case fcl::ErrorCode::Parameter: return FCL_ERR_PARAMETER;
  case fcl::ErrorCode::Io: return FCL_ERR_IO;
  case fcl::ErrorCode::Format: return FCL_ERR_FORMAT;
  case fcl::ErrorCode::Config: return FCL_ERR_CONFIG;
  case fcl::ErrorCode::State: return FCL_ERR_STATE;
  case fcl::ErrorCode::Numeric: return FCL_ERR_NUMERIC;
  case fcl::ErrorCode::DimensionMismatch: return FCL_ERR_DIMENSION;
  }
  return FCL_ERR_INTERNAL;
}

fcl_status fail(fcl_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes and the thread-local message.
template <typename Fn>
fcl_status guarded(Fn&& fn) {
  try {
    const fcl_status status = fn();
    if (status == FCL_OK) {
      g_last_error.clear();
    }
    return status;
  } catch (const fcl::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FCL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FCL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FCL_ERR_INTERNAL, "unknown error");
  }
}

#define FCL_REQUIRE(ptr)                                                                   \
  do {                                                                                     \
    if ((ptr) == nullptr) {                                                                \
      return fail(FCL_ERR_NULL_ARGUMENT, std::string(__func__) + ": " #ptr " is NULL");    \
    }                                                                                      \
  } while (0)

fcl::losses::LossKind to_kind(fcl_loss_kind kind) {
  if (kind < FCL_LOSS_CE || kind > FCL_LOSS_FCL) {
    throw fcl::Error(fcl::ErrorCode::Parameter, "unknown loss kind " + std::to_string(kind));
  }
  return static_cast<fcl::losses::LossKind>(kind);
}

fcl::losses::LossSpec to_spec(const fcl_loss_params& p) {
  fcl::losses::LossSpec s;
  s.kind = to_kind(p.kind);
  s.q = p.q;
  s.alpha = p.alpha;
  s.beta = p.beta;
  s.A = p.A;
  s.mu = p.mu;
  s.active = to_kind(p.active);
  s.passive = to_kind(p.passive);
  return s;
}

fcl::noise::NoiseSpec to_noise_spec(const fcl_noise_spec& in) {
  fcl::noise::NoiseSpec s;
  switch (in.kind) {
  case FCL_NOISE_NONE: s.kind = fcl::noise::NoiseKind::None; break;
  case FCL_NOISE_SYMMETRIC: s.kind = fcl::noise::NoiseKind::Symmetric; break;
  case FCL_NOISE_ASYMMETRIC: s.kind = fcl::noise::NoiseKind::Asymmetric; break;
  case FCL_NOISE_CIRCULAR: s.kind = fcl::noise::NoiseKind::SuperclassCircular; break;
  default: throw fcl::Error(fcl::ErrorCode::Parameter, "unknown noise kind");
  }
  s.eta = in.eta;
  s.superclass_size = in.superclass_size;
  s.seed = in.seed;
  if (s.kind == fcl::noise::NoiseKind::Asymmetric) {
    const std::string map = in.pair_map != nullptr ? in.pair_map : "mnist";
    const bool is_preset = map.find_first_of(":<") == std::string::npos;
    s.pair_map = is_preset ? fcl::noise::preset_pair_map(map) : fcl::noise::parse_pair_map(map);
  }
  return s;
}

std::size_t infer_classes(const std::vector<fcl::noise::Label>& labels, std::size_t given) {
  if (given != 0) {
    return given;
  }
  fcl::noise::Label max_label = 0;
  for (auto l : labels) {
    max_label = std::max(max_label, l);
  }
  return std::max<std::size_t>(2, std::size_t{max_label} + 1);
}

} // namespace

extern "C" {

const char* fcl_version(void) { return "0.1.0"; }

const char* fcl_last_error(void) { return g_last_error.c_str(); }

const char* fcl_status_name(fcl_status status) {
  switch (status) {
  case FCL_OK: return "ok";
  case FCL_ERR_DOMAIN: return "domain error";
  case FCL_ERR_PARAMETER: return "parameter error";
  case FCL_ERR_IO: return "i/o error";
  case FCL_ERR_FORMAT: return "format error";
  case FCL_ERR_CONFIG: return "config error";
  case FCL_ERR_STATE: return "state error";
  case FCL_ERR_NUMERIC: return "numeric error";
  case FCL_ERR_DIMENSION: return "dimension mismatch";
  case FCL_ERR_NULL_ARGUMENT: return "null argument";
  case FCL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- special functions ----------------------------------------------------

fcl_status fcl_gamma(double z, double* out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = fcl::specialfn::gamma(z);
    return FCL_OK;
  });
}

fcl_status fcl_digamma(double z, double* out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = fcl::specialfn::digamma(z);
    return FCL_OK;
  });
}

fcl_status fcl_gamma_weierstrass(double z, uint64_t terms, double* out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = fcl::specialfn::gamma_weierstrass(z, terms);
    return FCL_OK;
  });
}

// ---- losses -----------------------------------------------------------------

void fcl_loss_params_default(fcl_loss_params* params, fcl_loss_kind kind) {
  if (params == nullptr) {
    return;
  }
  const fcl::losses::LossSpec s;
  params->kind = kind;
  params->q = s.q;
  params->alpha = s.alpha;
  params->beta = s.beta;
  params->A = s.A;
  params->mu = s.mu;
  params->active = FCL_LOSS_NCE;
  params->passive = FCL_LOSS_MAE;
}

fcl_status fcl_loss_eval(const fcl_loss_params* params, const double* probs, size_t num_classes,
                         size_t label, double* value, double* grad_p, double* grad_mu) {
  FCL_REQUIRE(params);
  FCL_REQUIRE(probs);
  return guarded([&] {
    const auto eval = fcl::losses::evaluate(to_spec(*params), {probs, num_classes}, label);
    if (value != nullptr) *value = eval.value;
    if (grad_p != nullptr) std::copy(eval.grad_p.begin(), eval.grad_p.end(), grad_p);
    if (grad_mu != nullptr) *grad_mu = eval.grad_mu;
    return FCL_OK;
  });
}

fcl_status fcl_beta_equivalent(double mu, double p_true, double A, double* out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = fcl::losses::beta_equivalent(mu, p_true, A);
    return FCL_OK;
  });
}

// ---- mu ---------------------------------------------------------------------

fcl_status fcl_mu_state_create(double mu0, double lr, size_t freeze_epochs, int use_adam,
                               fcl_mu_state** out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    fcl::mu::MuConfig cfg;
    cfg.mu0 = mu0;
    cfg.lr = lr;
    cfg.freeze_epochs = freeze_epochs;
    cfg.optimizer = use_adam ? fcl::mu::MuOptimizer::Adam : fcl::mu::MuOptimizer::SGD;
    *out = new fcl_mu_state{fcl::mu::MuState(cfg)};
    return FCL_OK;
  });
}

void fcl_mu_state_destroy(fcl_mu_state* state) { delete state; }

fcl_status fcl_mu_state_accumulate(fcl_mu_state* state, double batch_mean_grad_mu) {
  FCL_REQUIRE(state);
  return guarded([&] {
    state->state.accumulate(batch_mean_grad_mu);
    return FCL_OK;
  });
}

fcl_status fcl_mu_state_epoch_update(fcl_mu_state* state) {
  FCL_REQUIRE(state);
  return guarded([&] {
    state->state.epoch_update();
    return FCL_OK;
  });
}

fcl_status fcl_mu_state_get(const fcl_mu_state* state, double* mu, double* acc_grad,
                            size_t* batches_seen, size_t* epoch) {
  FCL_REQUIRE(state);
  if (mu != nullptr) *mu = state->state.mu();
  if (acc_grad != nullptr) *acc_grad = state->state.acc_grad();
  if (batches_seen != nullptr) *batches_seen = state->state.batches_seen();
  if (epoch != nullptr) *epoch = state->state.epoch();
  g_last_error.clear();
  return FCL_OK;
}

// ---- noise ------------------------------------------------------------------

fcl_status fcl_noise_corrupt(const fcl_noise_spec* spec, const uint32_t* labels, size_t n,
                             uint32_t* out_labels, uint8_t* out_flipped) {
  FCL_REQUIRE(spec);
  FCL_REQUIRE(out_labels);
  if (n > 0) {
    FCL_REQUIRE(labels);
  }
  return guarded([&] {
    const std::vector<fcl::noise::Label> in(labels, labels + n);
    const auto result = fcl::noise::corrupt(in, infer_classes(in, spec->num_classes), to_noise_spec(*spec));
    std::copy(result.labels.begin(), result.labels.end(), out_labels);
    if (out_flipped != nullptr) {
      for (std::size_t i = 0; i < n; ++i) {
        out_flipped[i] = result.flipped[i] ? 1 : 0;
      }
    }
    return FCL_OK;
  });
}

fcl_status fcl_noisify_file(const fcl_noise_spec* spec, const char* input_path,
                            const char* output_path, const char* report_path) {
  FCL_REQUIRE(spec);
  FCL_REQUIRE(input_path);
  FCL_REQUIRE(output_path);
  return guarded([&] {
    const auto labels = fcl::data::read_label_file(input_path);
    const std::size_t K = infer_classes(labels, spec->num_classes);
    const auto noise_spec = to_noise_spec(*spec);
    const auto result = fcl::noise::corrupt(labels, K, noise_spec);
    fcl::data::write_label_file(result.labels, output_path);
    if (report_path != nullptr && *report_path != '\0') {
      const auto report = fcl::noise::make_report(labels, result, K, noise_spec);
      std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
      if (!out) {
        throw fcl::Error(fcl::ErrorCode::Io, std::string("cannot open ") + report_path);
      }
      out << fcl::noise::report_to_json(report, noise_spec);
    }
    return FCL_OK;
  });
}

// ---- datasets ---------------------------------------------------------------

fcl_status fcl_dataset_generate_blobs(size_t n, size_t num_classes, size_t dim, double separation,
                                      uint64_t seed, fcl_dataset** out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = new fcl_dataset{fcl::data::generate_blobs(n, num_classes, dim, separation, seed)};
    return FCL_OK;
  });
}

fcl_status fcl_dataset_read_idx(const char* images_path, const char* labels_path, fcl_dataset** out) {
  FCL_REQUIRE(images_path);
  FCL_REQUIRE(labels_path);
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = new fcl_dataset{fcl::data::read_idx(images_path, labels_path)};
    return FCL_OK;
  });
}

fcl_status fcl_dataset_write_idx(const fcl_dataset* ds, const char* images_path,
                                 const char* labels_path) {
  FCL_REQUIRE(ds);
  FCL_REQUIRE(images_path);
  FCL_REQUIRE(labels_path);
  return guarded([&] {
    fcl::data::write_idx(ds->ds, images_path, labels_path);
    return FCL_OK;
  });
}

fcl_status fcl_dataset_write_csv(const fcl_dataset* ds, const char* path) {
  FCL_REQUIRE(ds);
  FCL_REQUIRE(path);
  return guarded([&] {
    fcl::data::write_csv(ds->ds, path);
    return FCL_OK;
  });
}

fcl_status fcl_dataset_shape(const fcl_dataset* ds, size_t* n, size_t* dim, size_t* num_classes) {
  FCL_REQUIRE(ds);
  if (n != nullptr) *n = ds->ds.size();
  if (dim != nullptr) *dim = ds->ds.dim;
  if (num_classes != nullptr) *num_classes = ds->ds.num_classes;
  g_last_error.clear();
  return FCL_OK;
}

const double* fcl_dataset_features(const fcl_dataset* ds) {
  return ds != nullptr ? ds->ds.features.data() : nullptr;
}

const uint32_t* fcl_dataset_labels(const fcl_dataset* ds) {
  return ds != nullptr ? ds->ds.labels.data() : nullptr;
}

void fcl_dataset_destroy(fcl_dataset* ds) { delete ds; }

// ---- models -----------------------------------------------------------------

fcl_status fcl_model_load(const char* checkpoint_path, fcl_model** out) {
  FCL_REQUIRE(checkpoint_path);
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = new fcl_model{fcl::net::load_checkpoint(checkpoint_path)};
    return FCL_OK;
  });
}

fcl_status fcl_model_shape(const fcl_model* model, size_t* input_dim, size_t* num_classes) {
  FCL_REQUIRE(model);
  if (input_dim != nullptr) *input_dim = model->model.input_dim();
  if (num_classes != nullptr) *num_classes = model->model.num_classes();
  g_last_error.clear();
  return FCL_OK;
}

fcl_status fcl_model_predict(const fcl_model* model, const double* x, size_t dim, double* probs_out,
                             size_t num_classes) {
  FCL_REQUIRE(model);
  FCL_REQUIRE(x);
  FCL_REQUIRE(probs_out);
  return guarded([&] {
    if (num_classes != model->model.num_classes()) {
      throw fcl::Error(fcl::ErrorCode::DimensionMismatch, "output buffer size does not match class count");
    }
    const auto probs = fcl::net::forward(model->model, {x, dim});
    std::copy(probs.begin(), probs.end(), probs_out);
    return FCL_OK;
  });
}

fcl_status fcl_model_evaluate(const fcl_model* model, const fcl_dataset* ds, double* accuracy) {
  FCL_REQUIRE(model);
  FCL_REQUIRE(ds);
  FCL_REQUIRE(accuracy);
  return guarded([&] {
    *accuracy = fcl::experiment::evaluate(model->model, ds->ds);
    return FCL_OK;
  });
}

void fcl_model_destroy(fcl_model* model) { delete model; }

// ---- configuration ----------------------------------------------------------

fcl_status fcl_config_load(const char* path, fcl_config** out) {
  FCL_REQUIRE(path);
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = new fcl_config{fcl::config::Config::load(path)};
    return FCL_OK;
  });
}

fcl_status fcl_config_parse(const char* text, fcl_config** out) {
  FCL_REQUIRE(text);
  FCL_REQUIRE(out);
  return guarded([&] {
    *out = new fcl_config{fcl::config::Config::parse(text)};
    return FCL_OK;
  });
}

fcl_status fcl_config_set(fcl_config* cfg, const char* key, const char* value) {
  FCL_REQUIRE(cfg);
  FCL_REQUIRE(key);
  FCL_REQUIRE(value);
  return guarded([&] {
    cfg->cfg.set(key, value);
    return FCL_OK;
  });
}

fcl_status fcl_config_override(fcl_config* cfg, const char* assignment) {
  FCL_REQUIRE(cfg);
  FCL_REQUIRE(assignment);
  return guarded([&] {
    cfg->cfg.apply_override(assignment);
    return FCL_OK;
  });
}

fcl_status fcl_config_get(const fcl_config* cfg, const char* key, char* buf, size_t buf_len,
                          size_t* needed) {
  FCL_REQUIRE(cfg);
  FCL_REQUIRE(key);
  const auto value = cfg->cfg.get(key);
  if (!value) {
    return fail(FCL_ERR_PARAMETER, std::string("config key '") + key + "' is not set");
  }
  if (needed != nullptr) *needed = value->size();
  if (buf != nullptr && buf_len > 0) {
    const std::size_t n = std::min(buf_len - 1, value->size());
    std::memcpy(buf, value->data(), n);
    buf[n] = '\0';
  }
  g_last_error.clear();
  return FCL_OK;
}

fcl_status fcl_config_validate(const fcl_config* cfg) {
  FCL_REQUIRE(cfg);
  return guarded([&] {
    (void)fcl::experiment::from_config(cfg->cfg);
    return FCL_OK;
  });
}

void fcl_config_destroy(fcl_config* cfg) { delete cfg; }

// ---- training ---------------------------------------------------------------

fcl_status fcl_train(const fcl_config* cfg, const char* output_dir, fcl_run_record** out) {
  FCL_REQUIRE(cfg);
  FCL_REQUIRE(out);
  return guarded([&] {
    auto exp = fcl::experiment::from_config(cfg->cfg);
    if (output_dir != nullptr && *output_dir != '\0') {
      exp.output_dir = output_dir;
    }
    std::optional<fcl::net::MlpModel> model;
    auto holder = std::make_unique<fcl_run_record>();
    holder->record = fcl::experiment::run(exp, &model);
    if (!exp.output_dir.empty()) {
      const auto dir = exp.output_dir / holder->record.run_id;
      fcl::experiment::write_run(holder->record, dir, exp.save_model && model ? &*model : nullptr);
      holder->dir = dir.string();
    }
    holder->csv = fcl::experiment::record_to_csv(holder->record);
    *out = holder.release();
    return FCL_OK;
  });
}

const char* fcl_run_record_id(const fcl_run_record* rec) {
  return rec != nullptr ? rec->record.run_id.c_str() : "";
}

const char* fcl_run_record_dir(const fcl_run_record* rec) {
  return rec != nullptr ? rec->dir.c_str() : "";
}

size_t fcl_run_record_epochs(const fcl_run_record* rec) {
  return rec != nullptr ? rec->record.rows.size() : 0;
}

fcl_status fcl_run_record_row(const fcl_run_record* rec, size_t index, fcl_epoch_row* out) {
  FCL_REQUIRE(rec);
  FCL_REQUIRE(out);
  if (index >= rec->record.rows.size()) {
    return fail(FCL_ERR_PARAMETER, "epoch row index out of range");
  }
  const auto& r = rec->record.rows[index];
  out->epoch = r.epoch;
  out->mean_train_loss = r.mean_train_loss;
  out->train_acc = r.train_acc;
  out->val_acc = r.val_acc;
  out->has_test_acc = r.test_acc.has_value() ? 1 : 0;
  out->test_acc = r.test_acc.value_or(std::numeric_limits<double>::quiet_NaN());
  out->mu = r.mu;
  out->lr = r.lr;
  g_last_error.clear();
  return FCL_OK;
}

const char* fcl_run_record_config_value(const fcl_run_record* rec, const char* key) {
  if (rec == nullptr || key == nullptr) {
    return nullptr;
  }
  const auto it = rec->record.config.find(key);
  return it == rec->record.config.end() ? nullptr : it->second.c_str();
}

const char* fcl_run_record_csv(const fcl_run_record* rec) {
  return rec != nullptr ? rec->csv.c_str() : "";
}

void fcl_run_record_destroy(fcl_run_record* rec) { delete rec; }

// ---- sweeps -----------------------------------------------------------------

fcl_status fcl_sweep(const fcl_config* base, const double* etas, size_t n_etas,
                     const char* const* losses, size_t n_losses, const uint64_t* seeds,
                     size_t n_seeds, size_t jobs, const char* output_dir, fcl_sweep_result** out) {
  FCL_REQUIRE(base);
  FCL_REQUIRE(etas);
  FCL_REQUIRE(losses);
  FCL_REQUIRE(out);
  return guarded([&] {
    auto exp = fcl::experiment::from_config(base->cfg);
    if (output_dir != nullptr && *output_dir != '\0') {
      exp.output_dir = output_dir;
    }
    std::vector<std::string> loss_names;
    for (std::size_t i = 0; i < n_losses; ++i) {
      if (losses[i] == nullptr) {
        throw fcl::Error(fcl::ErrorCode::Parameter, "NULL loss name");
      }
      // Reject unknown names up front rather than as failed cells.
      (void)fcl::experiment::loss_from_name(losses[i], exp.loss);
      loss_names.emplace_back(losses[i]);
    }
    std::vector<std::uint64_t> seed_list;
    if (seeds != nullptr) {
      seed_list.assign(seeds, seeds + n_seeds);
    }
    auto holder = std::make_unique<fcl_sweep_result>();
    holder->result = fcl::experiment::sweep(exp, {etas, etas + n_etas}, loss_names, seed_list, jobs);
    holder->summary = fcl::experiment::summary_csv(holder->result);
    *out = holder.release();
    return FCL_OK;
  });
}

size_t fcl_sweep_cell_count(const fcl_sweep_result* result) {
  return result != nullptr ? result->result.cells.size() : 0;
}

fcl_status fcl_sweep_get_cell(const fcl_sweep_result* result, size_t index, fcl_sweep_cell* out) {
  FCL_REQUIRE(result);
  FCL_REQUIRE(out);
  if (index >= result->result.cells.size()) {
    return fail(FCL_ERR_PARAMETER, "sweep cell index out of range");
  }
  const auto& c = result->result.cells[index];
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  out->loss = c.loss.c_str();
  out->eta = c.eta;
  out->seed = c.seed;
  out->run_id = c.run_id.c_str();
  out->ok = c.record && !c.record->rows.empty() ? 1 : 0;
  out->final_val_acc = out->ok ? c.record->rows.back().val_acc : nan;
  out->final_test_acc = out->ok ? c.record->rows.back().test_acc.value_or(nan) : nan;
  out->final_mu = out->ok ? c.record->rows.back().mu : nan;
  out->error = c.error.c_str();
  g_last_error.clear();
  return FCL_OK;
}

const char* fcl_sweep_summary_csv(const fcl_sweep_result* result) {
  return result != nullptr ? result->summary.c_str() : "";
}

void fcl_sweep_result_destroy(fcl_sweep_result* result) { delete result; }

// ---- verification -----------------------------------------------------------

void fcl_verify_options_default(fcl_verify_options* options) {
  if (options == nullptr) {
    return;
  }
  const fcl::verify::VerifyOptions d;
  options->weierstrass_terms = d.weierstrass_terms;
  options->fd_step = d.fd_step;
  options->inject_grad_sign_fault = 0;
}

fcl_status fcl_verify(const fcl_verify_options* options, fcl_verify_report** out) {
  FCL_REQUIRE(out);
  return guarded([&] {
    fcl::verify::VerifyOptions opt;
    if (options != nullptr) {
      opt.weierstrass_terms = options->weierstrass_terms;
      opt.fd_step = options->fd_step;
      opt.inject_grad_sign_fault = options->inject_grad_sign_fault != 0;
    }
    if (!(opt.fd_step > 0.0) || opt.weierstrass_terms == 0) {
      throw fcl::Error(fcl::ErrorCode::Parameter, "fd_step and weierstrass_terms must be positive");
    }
    *out = new fcl_verify_report{fcl::verify::run_checks(opt)};
    return FCL_OK;
  });
}

size_t fcl_verify_check_count(const fcl_verify_report* report) {
  return report != nullptr ? report->checks.size() : 0;
}

fcl_status fcl_verify_get_check(const fcl_verify_report* report, size_t index, fcl_verify_check* out) {
  FCL_REQUIRE(report);
  FCL_REQUIRE(out);
  if (index >= report->checks.size()) {
    return fail(FCL_ERR_PARAMETER, "check index out of range");
  }
  const auto& c = report->checks[index];
  out->name = c.name.c_str();
  out->passed = c.passed ? 1 : 0;
  out->max_error = c.max_error;
  out->tolerance = c.tolerance;
  out->detail = c.detail.c_str();
  g_last_error.clear();
  return FCL_OK;
}

int fcl_verify_all_passed(const fcl_verify_report* report) {
  return report != nullptr && fcl::verify::all_passed(report->checks) ? 1 : 0;
}

void fcl_verify_report_destroy(fcl_verify_report* report) { delete report; }

// ---- report -----------------------------------------------------------------

fcl_status fcl_report(const char* const* run_dirs, size_t n_dirs, const char* output_path,
                      size_t* n_runs, size_t* n_failed) {
  FCL_REQUIRE(run_dirs);
  FCL_REQUIRE(output_path);
  return guarded([&] {
    namespace fs = std::filesystem;
    std::string body = "run_id,series,epoch,value\n";
    std::vector<std::string> failures;
    std::size_t runs = 0;
    auto add_run = [&](const fs::path& dir) {
      try {
        body += fcl::experiment::report_rows(fcl::experiment::read_record_csv(dir / "run.csv"));
        ++runs;
      } catch (const fcl::Error& e) {
        failures.push_back(dir.string() + ": " + e.what());
      }
    };
    for (std::size_t i = 0; i < n_dirs; ++i) {
      if (run_dirs[i] == nullptr) {
        continue;
      }
      const fs::path dir(run_dirs[i]);
      if (fs::exists(dir / "run.csv")) {
        add_run(dir);
        continue;
      }
      std::vector<fs::path> children;
      std::error_code ec;
      if (fs::is_directory(dir, ec)) {
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
          if (entry.is_directory()) {
            children.push_back(entry.path());
          }
        }
      }
      std::sort(children.begin(), children.end());
      if (children.empty()) {
        failures.push_back(dir.string() + ": no run.csv found");
      }
      for (const auto& child : children) {
        add_run(child);
      }
    }
    std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw fcl::Error(fcl::ErrorCode::Io, std::string("cannot open ") + output_path);
    }
    out << body;
    if (n_runs != nullptr) *n_runs = runs;
    if (n_failed != nullptr) *n_failed = failures.size();
    if (!failures.empty()) {
      std::string msg;
      for (const auto& f : failures) {
        msg += (msg.empty() ? "" : "\n") + f;
      }
      return fail(FCL_ERR_FORMAT, msg);
    }
    return FCL_OK;
  });
}

} // extern "C"
