#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "losses.hpp"
#include "mu_adapter.hpp"
#include "net.hpp"
#include "noise.hpp"

namespace fcl::experiment {

struct DataSpec {
  std::string source = "blobs";  // "blobs" or "idx"
  std::size_t n = 5000;
  std::size_t num_classes = 4;
  std::size_t dim = 10;
  double separation = 4.0;
  std::size_t test_n = 2000;
  double val_fraction = 0.2;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};

struct SeedSet {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t noise = 0;
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
};

struct ExperimentConfig {
  std::string run_id;  // empty: derived from loss, eta and seed
  std::uint64_t seed = 1;  // master seed; unset sub-seeds derive from it
  std::optional<std::uint64_t> data_seed, split_seed, noise_seed, init_seed, shuffle_seed;

  DataSpec data;
  noise::NoiseSpec noise;  // noise.seed is ignored; see seeds()
  std::string noise_preset;  // informational echo of the pair-map preset
  bool noise_before_split = false;
  losses::LossSpec loss;  // loss.mu is the initial mu
  mu::MuConfig mu;        // mu.mu0 mirrors loss.mu
  std::vector<std::size_t> hidden = {64, 64};
  net::OptimizerConfig optim;
  std::size_t epochs = 40;
  std::size_t batch_size = 128;
  bool eval_test = true;
  bool save_model = true;
  std::filesystem::path output_dir;

  SeedSet seeds() const;
  std::string resolved_run_id() const;
  void validate() const;
};

/// Every key accepted in a configuration file.
const std::vector<std::string>& known_keys();

ExperimentConfig from_config(const config::Config& cfg);
/// Resolved configuration (all defaults and seeds filled in) as key/value pairs.
std::map<std::string, std::string> to_entries(const ExperimentConfig& cfg);

/// Loss by display name: any LossKind name, or "nce+mae" / "nce+rce" for the APL pairs.
losses::LossSpec loss_from_name(const std::string& name, const losses::LossSpec& base);
std::string loss_name(const losses::LossSpec& spec);

struct EpochRow {
  std::size_t epoch = 0;
  double mean_train_loss = 0.0;
  double train_acc = 0.0;  // against the (possibly noisy) training labels
  double val_acc = 0.0;
  std::optional<double> test_acc;
  double mu = 0.0;  // mu in effect during the epoch
  double lr = 0.0;
};

struct RunRecord {
  std::string run_id;
  std::vector<EpochRow> rows;
  std::map<std::string, std::string> config;
  std::optional<noise::FlipReport> noise_report;
};

struct Datasets {
  data::Dataset train;  // labels possibly corrupted
  data::Dataset val;
  std::optional<data::Dataset> test;
  std::vector<data::Label> train_clean_labels;
  noise::NoiseResult noise;
  noise::FlipReport report;
};

/// Builds train/val/test sets and applies label noise according to cfg.
Datasets prepare_data(const ExperimentConfig& cfg);

/// Fraction of rows whose argmax prediction equals the label (ties -> lowest index).
double evaluate(const net::MlpModel& model, const data::Dataset& ds);

/// Trains per the FCL procedure: per batch forward, loss, backprop, clipped Adam
/// step, mu-gradient accumulation; once per epoch a mu update. Deterministic.
RunRecord run(const ExperimentConfig& cfg, std::optional<net::MlpModel>* model_out = nullptr);

/// One row per epoch; header epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr.
std::string record_to_csv(const RunRecord& record);
std::string record_to_json(const RunRecord& record);
RunRecord read_record_csv(const std::filesystem::path& path);

/// Writes run.csv and run.json (plus model.bin when a model is given) into dir.
void write_run(const RunRecord& record, const std::filesystem::path& dir,
               const net::MlpModel* model = nullptr);

struct SweepCell {
  std::string loss;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::string run_id;
  std::optional<RunRecord> record;
  std::string error;  // non-empty when the run failed
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

/// Cartesian product losses x etas x seeds. Failed cells are marked and the
/// rest continue. With base.output_dir set, each run is written to
/// output_dir/<run_id> and the summary to output_dir/summary.csv. jobs > 1 runs
/// cells on worker threads; results do not depend on jobs.
SweepResult sweep(const ExperimentConfig& base, const std::vector<double>& etas,
                  const std::vector<std::string>& losses, const std::vector<std::uint64_t>& seeds,
                  std::size_t jobs = 1);

/// loss,eta,seed,run_id,status,final_val_acc,final_test_acc,final_mu,error
std::string summary_csv(const SweepResult& result);

/// Tidy long-format rows "run_id,series,epoch,value" for one record.
std::string report_rows(const RunRecord& record);

} // namespace fcl::experiment
