#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace fcl::experiment {

namespace {

// Salts for deriving per-purpose seeds from the master seed.
enum SeedSalt : std::uint64_t { kDataSalt = 1, kSplitSalt, kNoiseSalt, kInitSalt, kShuffleSalt };

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short form for identifiers and config echo of human-entered values.
std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += (i ? "," : "") + std::to_string(xs[i]);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::Io, "failed writing " + path.string());
  }
}

net::Matrix gather_rows(const data::Dataset& ds, std::span<const std::size_t> idx) {
  net::Matrix x(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(ds.dim));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto row = ds.row(idx[r]);
    std::copy(row.begin(), row.end(), x.row(static_cast<Eigen::Index>(r)).data());
  }
  return x;
}

bool spec_uses_mu(const losses::LossSpec& spec) {
  if (spec.kind == losses::LossKind::APL) {
    return losses::uses_mu(spec.active) || losses::uses_mu(spec.passive);
  }
  return losses::uses_mu(spec.kind);
}

} // namespace

SeedSet ExperimentConfig::seeds() const {
  return {data_seed.value_or(derive_seed(seed, kDataSalt)),
          split_seed.value_or(derive_seed(seed, kSplitSalt)),
          noise_seed.value_or(derive_seed(seed, kNoiseSalt)),
          init_seed.value_or(derive_seed(seed, kInitSalt)),
          shuffle_seed.value_or(derive_seed(seed, kShuffleSalt))};
}

std::string ExperimentConfig::resolved_run_id() const {
  if (!run_id.empty()) {
    return run_id;
  }
  std::string name = loss_name(loss);
  std::replace(name.begin(), name.end(), '+', '-');
  return name + "_eta" + fmt_short(noise.kind == noise::NoiseKind::None ? 0.0 : noise.eta) + "_s" +
         std::to_string(seed);
}

void ExperimentConfig::validate() const {
  if (epochs == 0) throw Error(ErrorCode::Parameter, "train.epochs must be >= 1");
  if (batch_size == 0) throw Error(ErrorCode::Parameter, "train.batch_size must be >= 1");
  if (data.source != "blobs" && data.source != "idx") {
    throw Error(ErrorCode::Parameter, "data.source must be 'blobs' or 'idx'");
  }
  if (!(data.val_fraction > 0.0 && data.val_fraction < 1.0)) {
    throw Error(ErrorCode::Parameter, "data.val_fraction must lie in (0, 1)");
  }
  losses::validate(loss);
  if (!(mu.lr > 0.0)) throw Error(ErrorCode::Parameter, "mu.lr must be positive");
  if (!(mu.mu0 >= 0.0 && mu.mu0 <= 1.0)) throw Error(ErrorCode::Domain, "loss.mu0 outside [0, 1]");
  net::OptimizerConfig o = optim;
  o.total_epochs = epochs;
  net::validate(o);
  if (!(noise.eta >= 0.0 && noise.eta <= 1.0)) {
    throw Error(ErrorCode::Parameter, "noise.eta outside [0, 1]");
  }
  if (data.source == "blobs") {
    if (data.num_classes < 2 || data.dim < 2 || data.n < data.num_classes || !(data.separation > 0.0)) {
      throw Error(ErrorCode::Parameter, "blob data needs classes >= 2, dim >= 2, n >= classes, separation > 0");
    }
    // IDX class counts are only known after loading; corrupt() checks those.
    noise::validate(noise, data.num_classes);
  } else if (data.train_images.empty() || data.train_labels.empty()) {
    throw Error(ErrorCode::Parameter, "data.source = idx needs data.train_images and data.train_labels");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw Error(ErrorCode::Parameter, "model.hidden widths must be positive");
  }
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "run_id", "seed",
      "data.source", "data.n", "data.classes", "data.dim", "data.separation", "data.test_n",
      "data.val_fraction", "data.seed", "data.split_seed", "data.train_images",
      "data.train_labels", "data.test_images", "data.test_labels",
      "noise.kind", "noise.eta", "noise.preset", "noise.pairs", "noise.superclass_size",
      "noise.seed", "noise.before_split",
      "loss.kind", "loss.mu0", "loss.q", "loss.alpha", "loss.beta", "loss.A", "loss.active",
      "loss.passive",
      "mu.lr", "mu.freeze_epochs", "mu.optimizer",
      "model.hidden", "model.seed",
      "optim.lr", "optim.weight_decay", "optim.beta1", "optim.beta2", "optim.eps",
      "optim.clip_norm",
      "train.epochs", "train.batch_size", "train.shuffle_seed", "train.eval_test",
      "train.save_model",
      "output.dir"};
  return keys;
}

losses::LossSpec loss_from_name(const std::string& name, const losses::LossSpec& base) {
  losses::LossSpec spec = base;
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto plus = lower.find('+');
  if (plus != std::string::npos) {
    spec.kind = losses::LossKind::APL;
    spec.active = losses::parse_loss_kind(lower.substr(0, plus));
    spec.passive = losses::parse_loss_kind(lower.substr(plus + 1));
  } else {
    spec.kind = losses::parse_loss_kind(lower);
  }
  return spec;
}

std::string loss_name(const losses::LossSpec& spec) {
  if (spec.kind == losses::LossKind::APL) {
    return std::string(losses::to_string(spec.active)) + "+" +
           std::string(losses::to_string(spec.passive));
  }
  return std::string(losses::to_string(spec.kind));
}

ExperimentConfig from_config(const config::Config& c) {
  c.check_known(known_keys());
  ExperimentConfig cfg;
  auto wrap = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config) {
        throw;
      }
      throw Error(ErrorCode::Config, "key '" + key + "': " + e.what());
    }
  };
  auto opt_seed = [&](const std::string& key) -> std::optional<std::uint64_t> {
    if (!c.contains(key)) {
      return std::nullopt;
    }
    return c.get_uint(key, 0);
  };

  cfg.run_id = c.get_string("run_id", "");
  cfg.seed = c.get_uint("seed", cfg.seed);
  cfg.data_seed = opt_seed("data.seed");
  cfg.split_seed = opt_seed("data.split_seed");
  cfg.noise_seed = opt_seed("noise.seed");
  cfg.init_seed = opt_seed("model.seed");
  cfg.shuffle_seed = opt_seed("train.shuffle_seed");

  auto& d = cfg.data;
  d.source = c.get_string("data.source", d.source);
  d.n = c.get_uint("data.n", d.n);
  d.num_classes = c.get_uint("data.classes", d.num_classes);
  d.dim = c.get_uint("data.dim", d.dim);
  d.separation = c.get_double("data.separation", d.separation);
  d.test_n = c.get_uint("data.test_n", d.test_n);
  d.val_fraction = c.get_double("data.val_fraction", d.val_fraction);
  d.train_images = c.get_string("data.train_images", "");
  d.train_labels = c.get_string("data.train_labels", "");
  d.test_images = c.get_string("data.test_images", "");
  d.test_labels = c.get_string("data.test_labels", "");

  wrap("noise.kind", [&] { cfg.noise.kind = noise::parse_noise_kind(c.get_string("noise.kind", "symmetric")); });
  cfg.noise.eta = c.get_double("noise.eta", 0.0);
  cfg.noise.superclass_size = c.get_uint("noise.superclass_size", cfg.noise.superclass_size);
  cfg.noise_before_split = c.get_bool("noise.before_split", false);
  cfg.noise_preset = c.get_string("noise.preset", "");
  if (c.contains("noise.pairs")) {
    wrap("noise.pairs", [&] { cfg.noise.pair_map = noise::parse_pair_map(*c.get("noise.pairs")); });
  } else if (!cfg.noise_preset.empty()) {
    wrap("noise.preset", [&] { cfg.noise.pair_map = noise::preset_pair_map(cfg.noise_preset); });
  } else if (cfg.noise.kind == noise::NoiseKind::Asymmetric) {
    cfg.noise_preset = "mnist";
    cfg.noise.pair_map = noise::preset_pair_map("mnist");
  }

  auto& l = cfg.loss;
  wrap("loss.kind", [&] { l = loss_from_name(c.get_string("loss.kind", "fcl"), l); });
  if (c.contains("loss.active") || c.contains("loss.passive")) {
    wrap("loss.active", [&] {
      l.active = losses::parse_loss_kind(c.get_string("loss.active", "nce"));
      l.passive = losses::parse_loss_kind(c.get_string("loss.passive", "mae"));
    });
  }
  l.mu = c.get_double("loss.mu0", 0.5);
  l.q = c.get_double("loss.q", l.q);
  l.alpha = c.get_double("loss.alpha", l.alpha);
  l.beta = c.get_double("loss.beta", l.beta);
  l.A = c.get_double("loss.A", l.A);

  cfg.mu.mu0 = l.mu;
  cfg.mu.lr = c.get_double("mu.lr", cfg.mu.lr);
  cfg.mu.freeze_epochs = c.get_uint("mu.freeze_epochs", cfg.mu.freeze_epochs);
  wrap("mu.optimizer", [&] { cfg.mu.optimizer = mu::parse_optimizer(c.get_string("mu.optimizer", "adam")); });

  cfg.hidden = c.get_uint_list("model.hidden", cfg.hidden);

  auto& o = cfg.optim;
  o.lr0 = c.get_double("optim.lr", o.lr0);
  o.weight_decay = c.get_double("optim.weight_decay", o.weight_decay);
  o.adam_beta1 = c.get_double("optim.beta1", o.adam_beta1);
  o.adam_beta2 = c.get_double("optim.beta2", o.adam_beta2);
  o.adam_eps = c.get_double("optim.eps", o.adam_eps);
  o.clip_norm = c.get_double("optim.clip_norm", o.clip_norm);

  cfg.epochs = c.get_uint("train.epochs", cfg.epochs);
  cfg.batch_size = c.get_uint("train.batch_size", cfg.batch_size);
  cfg.eval_test = c.get_bool("train.eval_test", cfg.eval_test);
  cfg.save_model = c.get_bool("train.save_model", cfg.save_model);
  cfg.optim.total_epochs = cfg.epochs;
  cfg.output_dir = c.get_string("output.dir", "");

  wrap("config", [&] { cfg.validate(); });
  return cfg;
}

std::map<std::string, std::string> to_entries(const ExperimentConfig& cfg) {
  const SeedSet s = cfg.seeds();
  std::map<std::string, std::string> e;
  e["run_id"] = cfg.resolved_run_id();
  e["seed"] = std::to_string(cfg.seed);
  e["data.source"] = cfg.data.source;
  if (cfg.data.source == "blobs") {
    e["data.n"] = std::to_string(cfg.data.n);
    e["data.classes"] = std::to_string(cfg.data.num_classes);
    e["data.dim"] = std::to_string(cfg.data.dim);
    e["data.separation"] = fmt_short(cfg.data.separation);
    e["data.test_n"] = std::to_string(cfg.data.test_n);
  } else {
    e["data.train_images"] = cfg.data.train_images.string();
    e["data.train_labels"] = cfg.data.train_labels.string();
    e["data.test_images"] = cfg.data.test_images.string();
    e["data.test_labels"] = cfg.data.test_labels.string();
  }
  e["data.val_fraction"] = fmt_short(cfg.data.val_fraction);
  e["data.seed"] = std::to_string(s.data);
  e["data.split_seed"] = std::to_string(s.split);
  e["noise.kind"] = std::string(noise::to_string(cfg.noise.kind));
  e["noise.eta"] = fmt_short(cfg.noise.eta);
  e["noise.seed"] = std::to_string(s.noise);
  e["noise.before_split"] = cfg.noise_before_split ? "true" : "false";
  if (cfg.noise.kind == noise::NoiseKind::Asymmetric) {
    e["noise.pairs"] = noise::format_pair_map(cfg.noise.pair_map);
    if (!cfg.noise_preset.empty()) e["noise.preset"] = cfg.noise_preset;
  }
  if (cfg.noise.kind == noise::NoiseKind::SuperclassCircular) {
    e["noise.superclass_size"] = std::to_string(cfg.noise.superclass_size);
  }
  e["loss.kind"] = loss_name(cfg.loss);
  e["loss.mu0"] = fmt_short(cfg.loss.mu);
  e["loss.q"] = fmt_short(cfg.loss.q);
  e["loss.alpha"] = fmt_short(cfg.loss.alpha);
  e["loss.beta"] = fmt_short(cfg.loss.beta);
  e["loss.A"] = fmt_short(cfg.loss.A);
  e["mu.lr"] = fmt_short(cfg.mu.lr);
  e["mu.freeze_epochs"] = std::to_string(cfg.mu.freeze_epochs);
  e["mu.optimizer"] = std::string(mu::to_string(cfg.mu.optimizer));
  e["model.hidden"] = join(cfg.hidden);
  e["model.seed"] = std::to_string(s.init);
  e["optim.lr"] = fmt_short(cfg.optim.lr0);
  e["optim.weight_decay"] = fmt_short(cfg.optim.weight_decay);
  e["optim.beta1"] = fmt_short(cfg.optim.adam_beta1);
  e["optim.beta2"] = fmt_short(cfg.optim.adam_beta2);
  e["optim.eps"] = fmt_short(cfg.optim.adam_eps);
  e["optim.clip_norm"] = fmt_short(cfg.optim.clip_norm);
  e["train.epochs"] = std::to_string(cfg.epochs);
  e["train.batch_size"] = std::to_string(cfg.batch_size);
  e["train.shuffle_seed"] = std::to_string(s.shuffle);
  e["train.eval_test"] = cfg.eval_test ? "true" : "false";
  return e;
}

Datasets prepare_data(const ExperimentConfig& cfg) {
  const SeedSet seeds = cfg.seeds();
  data::Dataset pool;
  std::optional<data::Dataset> test;
  if (cfg.data.source == "blobs") {
    // The test points are always carved out so train.eval_test does not change the training data.
    const std::size_t total = cfg.data.n + cfg.data.test_n;
    data::Dataset all = data::generate_blobs(total, cfg.data.num_classes, cfg.data.dim,
                                             cfg.data.separation, seeds.data);
    if (cfg.data.test_n > 0) {
      std::vector<std::size_t> perm(total);
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(seeds.data, 99));
      shuffle<std::size_t>(perm, rng);
      std::vector<std::size_t> test_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cfg.data.test_n));
      std::vector<std::size_t> pool_idx(perm.begin() + static_cast<std::ptrdiff_t>(cfg.data.test_n), perm.end());
      std::sort(test_idx.begin(), test_idx.end());
      std::sort(pool_idx.begin(), pool_idx.end());
      if (cfg.eval_test) {
        test = data::subset(all, test_idx);
      }
      pool = data::subset(all, pool_idx);
    } else {
      pool = std::move(all);
    }
  } else {
    pool = data::read_idx(cfg.data.train_images, cfg.data.train_labels);
    if (cfg.eval_test && !cfg.data.test_images.empty()) {
      test = data::read_idx(cfg.data.test_images, cfg.data.test_labels, pool.num_classes);
    }
  }
  pool.validate();

  noise::NoiseSpec spec = cfg.noise;
  spec.seed = seeds.noise;
  const data::SplitSpec split_spec{cfg.data.val_fraction, seeds.split};

  Datasets out;
  out.test = std::move(test);
  if (cfg.noise_before_split) {
    const auto noisy = noise::corrupt(pool.labels, pool.num_classes, spec);
    const auto [train_idx, val_idx] = data::split_indices(pool.size(), split_spec);
    data::Dataset noisy_pool = pool;
    noisy_pool.labels = noisy.labels;
    out.train = data::subset(noisy_pool, train_idx);
    out.val = data::subset(noisy_pool, val_idx);
    for (std::size_t i : train_idx) {
      out.train_clean_labels.push_back(pool.labels[i]);
      out.noise.labels.push_back(noisy.labels[i]);
      out.noise.flipped.push_back(noisy.flipped[i]);
    }
  } else {
    auto [train, val] = data::split(pool, split_spec);
    out.train_clean_labels = train.labels;
    out.noise = noise::corrupt(train.labels, train.num_classes, spec);
    train.labels = out.noise.labels;
    out.train = std::move(train);
    out.val = std::move(val);
  }
  out.report = noise::make_report(out.train_clean_labels, out.noise, out.train.num_classes, spec);
  return out;
}

double evaluate(const net::MlpModel& model, const data::Dataset& ds) {
  if (ds.size() == 0) {
    throw Error(ErrorCode::Parameter, "cannot evaluate on an empty dataset");
  }
  if (ds.dim != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset dimension does not match model input");
  }
  constexpr std::size_t kChunk = 1024;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t end = std::min(ds.size(), start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto cache = net::forward_batch(model, gather_rows(ds, idx));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto row = cache.probs.row(static_cast<Eigen::Index>(r));
      if (net::argmax({row.data(), static_cast<std::size_t>(row.size())}) == ds.labels[idx[r]]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

RunRecord run(const ExperimentConfig& cfg, std::optional<net::MlpModel>* model_out) {
  cfg.validate();
  const SeedSet seeds = cfg.seeds();
  Datasets sets = prepare_data(cfg);
  const data::Dataset& train = sets.train;
  const std::size_t K = train.num_classes;

  std::vector<std::size_t> widths{train.dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(K);
  net::MlpModel model(widths, seeds.init);
  net::AdamState adam = net::AdamState::zeros_like(model);
  net::OptimizerConfig optim = cfg.optim;
  optim.total_epochs = cfg.epochs;

  const bool learn_mu = spec_uses_mu(cfg.loss);
  mu::MuConfig mu_cfg = cfg.mu;
  mu_cfg.mu0 = cfg.loss.mu;
  mu::MuState mu_state(mu_cfg);
  losses::LossSpec loss = cfg.loss;

  RunRecord record;
  record.run_id = cfg.resolved_run_id();
  record.config = to_entries(cfg);
  record.noise_report = sets.report;

  std::vector<double> grad_row(K);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = net::cosine_lr(optim.lr0, epoch, cfg.epochs);
    loss.mu = mu_state.mu();
    const auto order = data::batches(train.size(), cfg.batch_size, derive_seed(seeds.shuffle, epoch));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); ++b) {
      const auto& idx = order[b];
      const auto cache = net::forward_batch(model, gather_rows(train, idx));
      const double inv_batch = 1.0 / static_cast<double>(idx.size());
      net::Matrix grad_p(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(K));
      double batch_loss = 0.0;
      double batch_grad_mu = 0.0;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto row = cache.probs.row(static_cast<Eigen::Index>(r));
        const std::span<const double> p(row.data(), K);
        double g_mu = 0.0;
        const double value = losses::evaluate_into(loss, p, train.labels[idx[r]], grad_row, &g_mu);
        batch_loss += value;
        batch_grad_mu += g_mu;
        for (std::size_t k = 0; k < K; ++k) {
          grad_p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = grad_row[k] * inv_batch;
        }
        if (net::argmax(p) == train.labels[idx[r]]) {
          ++correct;
        }
      }
      if (!std::isfinite(batch_loss) || !std::isfinite(batch_grad_mu)) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << ", batch " << b << " (mu = " << loss.mu << ")";
        throw Error(ErrorCode::Numeric, msg.str());
      }
      loss_sum += batch_loss;
      auto grads = net::backward(model, cache, grad_p);
      net::clip_and_step(model, grads, optim, lr, adam);
      if (learn_mu) {
        mu_state.accumulate(batch_grad_mu * inv_batch);
      }
    }

    EpochRow row;
    row.epoch = epoch;
    row.mean_train_loss = loss_sum / static_cast<double>(train.size());
    row.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    row.val_acc = evaluate(model, sets.val);
    if (sets.test) {
      row.test_acc = evaluate(model, *sets.test);
    }
    row.mu = mu_state.mu();
    row.lr = lr;
    record.rows.push_back(row);

    if (learn_mu) {
      mu_state.epoch_update();
    }
  }
  if (model_out != nullptr) {
    *model_out = std::move(model);
  }
  return record;
}

std::string record_to_csv(const RunRecord& record) {
  std::string out = "epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr\n";
  for (const auto& r : record.rows) {
    out += std::to_string(r.epoch) + "," + fmt_double(r.mean_train_loss) + "," +
           fmt_double(r.train_acc) + "," + fmt_double(r.val_acc) + "," +
           (r.test_acc ? fmt_double(*r.test_acc) : std::string()) + "," + fmt_double(r.mu) + "," +
           fmt_double(r.lr) + "\n";
  }
  return out;
}

std::string record_to_json(const RunRecord& record) {
  nlohmann::ordered_json j;
  j["run_id"] = record.run_id;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : record.config) {
    cfg[k] = v;
  }
  j["config"] = cfg;
  if (record.noise_report) {
    const auto& r = *record.noise_report;
    j["noise"] = {{"eta_requested", r.eta_requested},
                  {"eta_realized", r.eta_realized},
                  {"per_class_flip_counts", r.per_class_flip_counts},
                  {"seed", r.seed}};
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : record.rows) {
    nlohmann::ordered_json row;
    row["epoch"] = r.epoch;
    row["mean_train_loss"] = r.mean_train_loss;
    row["train_acc"] = r.train_acc;
    row["val_acc"] = r.val_acc;
    row["test_acc"] = r.test_acc ? nlohmann::ordered_json(*r.test_acc) : nlohmann::ordered_json();
    row["mu"] = r.mu;
    row["lr"] = r.lr;
    rows.push_back(row);
  }
  j["epochs"] = rows;
  return j.dump(2) + "\n";
}

RunRecord read_record_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "missing run record " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != "epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr") {
    throw Error(ErrorCode::Format, path.string() + ": unexpected run record header");
  }
  RunRecord record;
  record.run_id = path.parent_path().filename().string();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      fields.push_back(f);
    }
    if (fields.size() == 6 && line.back() == ',') {
      fields.emplace_back();
    }
    if (fields.size() != 7) {
      throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) +
                                         ": expected 7 fields");
    }
    try {
      EpochRow r;
      r.epoch = std::stoul(fields[0]);
      r.mean_train_loss = std::stod(fields[1]);
      r.train_acc = std::stod(fields[2]);
      r.val_acc = std::stod(fields[3]);
      if (!fields[4].empty()) {
        r.test_acc = std::stod(fields[4]);
      }
      r.mu = std::stod(fields[5]);
      r.lr = std::stod(fields[6]);
      record.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) +
                                         ": malformed number");
    }
  }
  if (record.rows.empty()) {
    throw Error(ErrorCode::Format, path.string() + ": run record has no rows");
  }
  return record;
}

void write_run(const RunRecord& record, const std::filesystem::path& dir, const net::MlpModel* model) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  }
  write_text(dir / "run.csv", record_to_csv(record));
  write_text(dir / "run.json", record_to_json(record));
  if (model != nullptr) {
    net::save_checkpoint(*model, dir / "model.bin");
  }
}

SweepResult sweep(const ExperimentConfig& base, const std::vector<double>& etas,
                  const std::vector<std::string>& losses, const std::vector<std::uint64_t>& seeds,
                  std::size_t jobs) {
  if (etas.empty() || losses.empty()) {
    throw Error(ErrorCode::Parameter, "sweep needs at least one eta and one loss");
  }
  const std::vector<std::uint64_t> seed_list = seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds;
  SweepResult result;
  std::vector<ExperimentConfig> configs;
  for (const auto& loss : losses) {
    for (double eta : etas) {
      for (std::uint64_t seed : seed_list) {
        ExperimentConfig cfg = base;
        cfg.loss = loss_from_name(loss, base.loss);
        cfg.noise.eta = eta;
        if (cfg.noise.kind == noise::NoiseKind::None && eta > 0.0) {
          cfg.noise.kind = noise::NoiseKind::Symmetric;
        }
        cfg.seed = seed;
        cfg.run_id.clear();
        SweepCell cell;
        cell.loss = loss_name(cfg.loss);
        cell.eta = eta;
        cell.seed = seed;
        cell.run_id = cfg.resolved_run_id();
        result.cells.push_back(std::move(cell));
        configs.push_back(std::move(cfg));
      }
    }
  }

  auto run_cell = [&](std::size_t i) {
    SweepCell& cell = result.cells[i];
    try {
      std::optional<net::MlpModel> model;
      cell.record = run(configs[i], &model);
      if (!base.output_dir.empty()) {
        write_run(*cell.record, base.output_dir / cell.run_id,
                  base.save_model && model ? &*model : nullptr);
      }
    } catch (const std::exception& e) {
      cell.record.reset();
      cell.error = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, configs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      run_cell(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          run_cell(i);
        }
      });
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  if (!base.output_dir.empty()) {
    std::filesystem::create_directories(base.output_dir);
    write_text(base.output_dir / "summary.csv", summary_csv(result));
  }
  return result;
}

std::string summary_csv(const SweepResult& result) {
  std::string out = "loss,eta,seed,run_id,status,final_val_acc,final_test_acc,final_mu,error\n";
  for (const auto& c : result.cells) {
    out += c.loss + "," + fmt_short(c.eta) + "," + std::to_string(c.seed) + "," + c.run_id + ",";
    if (c.record && !c.record->rows.empty()) {
      const auto& last = c.record->rows.back();
      out += "ok," + fmt_double(last.val_acc) + "," +
             (last.test_acc ? fmt_double(*last.test_acc) : std::string()) + "," +
             fmt_double(last.mu) + ",\n";
    } else {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out += "failed,,,," + err + "\n";
    }
  }
  return out;
}

std::string report_rows(const RunRecord& record) {
  std::string out;
  auto emit = [&](const char* series, std::size_t epoch, double value) {
    out += record.run_id + "," + series + "," + std::to_string(epoch) + "," + fmt_double(value) + "\n";
  };
  for (const auto& r : record.rows) emit("mean_train_loss", r.epoch, r.mean_train_loss);
  for (const auto& r : record.rows) emit("train_acc", r.epoch, r.train_acc);
  for (const auto& r : record.rows) emit("val_acc", r.epoch, r.val_acc);
  if (std::all_of(record.rows.begin(), record.rows.end(), [](const EpochRow& r) { return r.test_acc.has_value(); })) {
    for (const auto& r : record.rows) emit("test_acc", r.epoch, *r.test_acc);
  }
  for (const auto& r : record.rows) emit("mu", r.epoch, r.mu);
  for (const auto& r : record.rows) emit("lr", r.epoch, r.lr);
  return out;
}

} // namespace fcl::experiment
