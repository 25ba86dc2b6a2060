/*
 * fcl.h - C interface to the fractional classification loss laboratory.
 *
 * All functions return an fcl_status. On failure, fcl_last_error() returns a
 * message describing the most recent error on the calling thread. Objects
 * are opaque handles owned by the caller and released with the matching
 * *_destroy function; destroy functions accept NULL. Strings returned by
 * accessors stay valid until the owning handle is destroyed.
 */
#ifndef FCL_FCL_H
#define FCL_FCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FCL_BUILDING_LIBRARY)
#    define FCL_API __declspec(dllexport)
#  else
#    define FCL_API __declspec(dllimport)
#  endif
#else
#  define FCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fcl_status {
  FCL_OK = 0,
  FCL_ERR_DOMAIN = 1,        /* argument outside a function's domain */
  FCL_ERR_PARAMETER = 2,     /* invalid parameter value */
  FCL_ERR_IO = 3,            /* file could not be opened/written */
  FCL_ERR_FORMAT = 4,        /* malformed input file */
  FCL_ERR_CONFIG = 5,        /* configuration parse/validation error */
  FCL_ERR_STATE = 6,         /* call not valid in the object's current state */
  FCL_ERR_NUMERIC = 7,       /* non-finite value encountered */
  FCL_ERR_DIMENSION = 8,     /* shape mismatch */
  FCL_ERR_NULL_ARGUMENT = 9, /* required pointer was NULL */
  FCL_ERR_INTERNAL = 10
} fcl_status;

FCL_API const char* fcl_version(void);
FCL_API const char* fcl_last_error(void);
FCL_API const char* fcl_status_name(fcl_status status);

/* ---- special functions ------------------------------------------------ */

FCL_API fcl_status fcl_gamma(double z, double* out);
FCL_API fcl_status fcl_digamma(double z, double* out);
FCL_API fcl_status fcl_gamma_weierstrass(double z, uint64_t terms, double* out);

/* ---- losses ------------------------------------------------------------ */

typedef enum fcl_loss_kind {
  FCL_LOSS_CE = 0,
  FCL_LOSS_MAE,
  FCL_LOSS_GCE,
  FCL_LOSS_RCE,
  FCL_LOSS_NCE,
  FCL_LOSS_SCE,
  FCL_LOSS_APL,
  FCL_LOSS_FCE,
  FCL_LOSS_FCL
} fcl_loss_kind;

typedef struct fcl_loss_params {
  fcl_loss_kind kind;
  double q;     /* GCE exponent in (0, 1] */
  double alpha; /* active weight (SCE, APL) */
  double beta;  /* passive weight (SCE, APL) */
  double A;     /* RCE log-zero constant, < 0 */
  double mu;    /* fractional order in [0, 1] */
  fcl_loss_kind active;  /* APL components */
  fcl_loss_kind passive;
} fcl_loss_params;

/* Fills defaults: q = 0.7, alpha = beta = 1, A = -6, mu = 0.5, APL = NCE + MAE. */
FCL_API void fcl_loss_params_default(fcl_loss_params* params, fcl_loss_kind kind);

/* Evaluates one sample. grad_p (num_classes entries) and grad_mu may be NULL. */
FCL_API fcl_status fcl_loss_eval(const fcl_loss_params* params, const double* probs,
                                 size_t num_classes, size_t label, double* value, double* grad_p,
                                 double* grad_mu);

/* beta = -2 Gamma(2 - mu) (-log p_true)^mu / A, the SCE beta matching FCE at (mu, p_true). */
FCL_API fcl_status fcl_beta_equivalent(double mu, double p_true, double A, double* out);

/* ---- learnable mu ------------------------------------------------------ */

typedef struct fcl_mu_state fcl_mu_state;

FCL_API fcl_status fcl_mu_state_create(double mu0, double lr, size_t freeze_epochs, int use_adam,
                                       fcl_mu_state** out);
FCL_API void fcl_mu_state_destroy(fcl_mu_state* state);
FCL_API fcl_status fcl_mu_state_accumulate(fcl_mu_state* state, double batch_mean_grad_mu);
FCL_API fcl_status fcl_mu_state_epoch_update(fcl_mu_state* state);
/* Any output pointer may be NULL. */
FCL_API fcl_status fcl_mu_state_get(const fcl_mu_state* state, double* mu, double* acc_grad,
                                    size_t* batches_seen, size_t* epoch);

/* ---- label noise ------------------------------------------------------- */

typedef enum fcl_noise_kind {
  FCL_NOISE_NONE = 0,
  FCL_NOISE_SYMMETRIC,
  FCL_NOISE_ASYMMETRIC,
  FCL_NOISE_CIRCULAR
} fcl_noise_kind;

typedef struct fcl_noise_spec {
  fcl_noise_kind kind;
  double eta;
  /* Asymmetric only: a preset name ("mnist", "cifar10") or a pair list such
     as "7:1,2:7,5<>6,3:8". */
  const char* pair_map;
  size_t superclass_size; /* circular only */
  uint64_t seed;
  size_t num_classes;
} fcl_noise_spec;

/* out_labels receives n labels; out_flipped (nullable) receives n 0/1 flags. */
FCL_API fcl_status fcl_noise_corrupt(const fcl_noise_spec* spec, const uint32_t* labels, size_t n,
                                     uint32_t* out_labels, uint8_t* out_flipped);

/* Reads a label file (IDX1, or one label per line for .txt/.csv), writes the
   corrupted labels in the same format, and writes a JSON flip report when
   report_path is not NULL. num_classes = 0 infers max label + 1. */
FCL_API fcl_status fcl_noisify_file(const fcl_noise_spec* spec, const char* input_path,
                                    const char* output_path, const char* report_path);

/* ---- datasets ---------------------------------------------------------- */

typedef struct fcl_dataset fcl_dataset;

FCL_API fcl_status fcl_dataset_generate_blobs(size_t n, size_t num_classes, size_t dim,
                                              double separation, uint64_t seed, fcl_dataset** out);
FCL_API fcl_status fcl_dataset_read_idx(const char* images_path, const char* labels_path,
                                        fcl_dataset** out);
FCL_API fcl_status fcl_dataset_write_idx(const fcl_dataset* ds, const char* images_path,
                                         const char* labels_path);
FCL_API fcl_status fcl_dataset_write_csv(const fcl_dataset* ds, const char* path);
FCL_API fcl_status fcl_dataset_shape(const fcl_dataset* ds, size_t* n, size_t* dim,
                                     size_t* num_classes);
/* Row-major n x dim features and n labels. */
FCL_API const double* fcl_dataset_features(const fcl_dataset* ds);
FCL_API const uint32_t* fcl_dataset_labels(const fcl_dataset* ds);
FCL_API void fcl_dataset_destroy(fcl_dataset* ds);

/* ---- trained models ---------------------------------------------------- */

typedef struct fcl_model fcl_model;

FCL_API fcl_status fcl_model_load(const char* checkpoint_path, fcl_model** out);
FCL_API fcl_status fcl_model_shape(const fcl_model* model, size_t* input_dim, size_t* num_classes);
FCL_API fcl_status fcl_model_predict(const fcl_model* model, const double* x, size_t dim,
                                     double* probs_out, size_t num_classes);
FCL_API fcl_status fcl_model_evaluate(const fcl_model* model, const fcl_dataset* ds,
                                      double* accuracy);
FCL_API void fcl_model_destroy(fcl_model* model);

/* ---- configuration ----------------------------------------------------- */

typedef struct fcl_config fcl_config;

FCL_API fcl_status fcl_config_load(const char* path, fcl_config** out);
FCL_API fcl_status fcl_config_parse(const char* text, fcl_config** out);
FCL_API fcl_status fcl_config_set(fcl_config* cfg, const char* key, const char* value);
/* Applies "key=value". */
FCL_API fcl_status fcl_config_override(fcl_config* cfg, const char* assignment);
/* Copies the value into buf (NUL-terminated, truncated to buf_len). *needed
   receives the full length excluding the terminator. FCL_ERR_PARAMETER if the
   key is absent. */
FCL_API fcl_status fcl_config_get(const fcl_config* cfg, const char* key, char* buf,
                                  size_t buf_len, size_t* needed);
/* Parses the configuration into a run description without running it. */
FCL_API fcl_status fcl_config_validate(const fcl_config* cfg);
FCL_API void fcl_config_destroy(fcl_config* cfg);

/* ---- training runs ----------------------------------------------------- */

typedef struct fcl_run_record fcl_run_record;

typedef struct fcl_epoch_row {
  size_t epoch;
  double mean_train_loss;
  double train_acc;
  double val_acc;
  double test_acc; /* valid when has_test_acc != 0 */
  int has_test_acc;
  double mu;
  double lr;
} fcl_epoch_row;

/* Runs one training job. With output_dir non-NULL and non-empty (or the
   config key output.dir set), writes <dir>/<run_id>/{run.csv,run.json,model.bin}. */
FCL_API fcl_status fcl_train(const fcl_config* cfg, const char* output_dir, fcl_run_record** out);
FCL_API const char* fcl_run_record_id(const fcl_run_record* rec);
/* Directory the run was written to, or "" if it was not written. */
FCL_API const char* fcl_run_record_dir(const fcl_run_record* rec);
FCL_API size_t fcl_run_record_epochs(const fcl_run_record* rec);
FCL_API fcl_status fcl_run_record_row(const fcl_run_record* rec, size_t index, fcl_epoch_row* out);
/* Resolved configuration value echoed into the record; NULL if absent. */
FCL_API const char* fcl_run_record_config_value(const fcl_run_record* rec, const char* key);
FCL_API const char* fcl_run_record_csv(const fcl_run_record* rec);
FCL_API void fcl_run_record_destroy(fcl_run_record* rec);

/* ---- sweeps ------------------------------------------------------------ */

typedef struct fcl_sweep_result fcl_sweep_result;

typedef struct fcl_sweep_cell {
  const char* loss;
  double eta;
  uint64_t seed;
  const char* run_id;
  int ok;
  double final_val_acc;
  double final_test_acc; /* NaN when no test set */
  double final_mu;
  const char* error; /* "" when ok */
} fcl_sweep_cell;

/* Runs losses x etas x seeds (seeds may be NULL / 0 for the config seed).
   Failed cells are marked, not fatal. Writes runs and summary.csv under
   output_dir when given. */
FCL_API fcl_status fcl_sweep(const fcl_config* base, const double* etas, size_t n_etas,
                             const char* const* losses, size_t n_losses, const uint64_t* seeds,
                             size_t n_seeds, size_t jobs, const char* output_dir,
                             fcl_sweep_result** out);
FCL_API size_t fcl_sweep_cell_count(const fcl_sweep_result* result);
FCL_API fcl_status fcl_sweep_get_cell(const fcl_sweep_result* result, size_t index,
                                      fcl_sweep_cell* out);
FCL_API const char* fcl_sweep_summary_csv(const fcl_sweep_result* result);
FCL_API void fcl_sweep_result_destroy(fcl_sweep_result* result);

/* ---- verification ------------------------------------------------------ */

typedef struct fcl_verify_report fcl_verify_report;

typedef struct fcl_verify_options {
  uint64_t weierstrass_terms;
  double fd_step;
  int inject_grad_sign_fault; /* self-test: gradient checks must then fail */
} fcl_verify_options;

typedef struct fcl_verify_check {
  const char* name;
  int passed;
  double max_error;
  double tolerance;
  const char* detail;
} fcl_verify_check;

FCL_API void fcl_verify_options_default(fcl_verify_options* options);
FCL_API fcl_status fcl_verify(const fcl_verify_options* options, fcl_verify_report** out);
FCL_API size_t fcl_verify_check_count(const fcl_verify_report* report);
FCL_API fcl_status fcl_verify_get_check(const fcl_verify_report* report, size_t index,
                                        fcl_verify_check* out);
FCL_API int fcl_verify_all_passed(const fcl_verify_report* report);
FCL_API void fcl_verify_report_destroy(fcl_verify_report* report);

/* ---- plot data --------------------------------------------------------- */

/* Collects run.csv files from run_dirs (a directory holding run.csv, or one
   level of such subdirectories) and writes long-format CSV
   "run_id,series,epoch,value" to output_path. Unreadable directories are
   counted in *n_failed and listed in fcl_last_error(); the call then returns
   FCL_ERR_FORMAT after writing the runs that could be read. */
FCL_API fcl_status fcl_report(const char* const* run_dirs, size_t n_dirs, const char* output_path,
                              size_t* n_runs, size_t* n_failed);

#ifdef __cplusplus
}
#endif

#endif /* FCL_FCL_H */
