#include <doctest.h>

#include <json.hpp>

#include <cmath>

#include "config.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "support.hpp"

using namespace fcl::experiment;
using fcl::config::Config;

namespace {

// Small, fast configuration: 600 blob points, 8 epochs.
ExperimentConfig small(const std::string& extra = "") {
  auto c = Config::parse("data.n = 600\ndata.test_n = 200\nmodel.hidden = 16\n"
                         "train.epochs = 8\ntrain.batch_size = 64\nmu.freeze_epochs = 3\n");
  const auto more = Config::parse(extra);
  for (const auto& [k, v] : more.values()) c.set(k, v);
  return from_config(c);
}

} // namespace

TEST_CASE("config defaults and echo") {
  const auto cfg = from_config(Config::parse(""));
  CHECK(cfg.loss.kind == fcl::losses::LossKind::FCL);
  CHECK(cfg.loss.mu == 0.5);
  CHECK(cfg.mu.lr == 0.1);
  CHECK(cfg.mu.freeze_epochs == 5);
  CHECK(cfg.epochs == 40);
  CHECK(cfg.optim.lr0 == 1e-3);
  CHECK(cfg.optim.clip_norm == 10.0);
  CHECK(cfg.resolved_run_id() == "fcl_eta0_s1");

  const auto over = [] {
    auto c = Config::parse("");
    c.apply_override("loss.mu0=0.75");
    return from_config(c);
  }();
  CHECK(to_entries(over).at("loss.mu0") == "0.75");

  const auto apl = from_config(Config::parse("loss.kind = nce+rce\nnoise.eta = 0.4\nseed = 7\n"));
  CHECK(apl.loss.kind == fcl::losses::LossKind::APL);
  CHECK(apl.loss.passive == fcl::losses::LossKind::RCE);
  CHECK(apl.resolved_run_id() == "nce-rce_eta0.4_s7");

  const auto asym = from_config(Config::parse("noise.kind = asymmetric\nnoise.eta = 0.3\ndata.classes = 10\n"));
  CHECK(asym.noise.pair_map == fcl::noise::preset_pair_map("mnist"));
}

TEST_CASE("seeds derive from the master seed unless given") {
  const auto a = from_config(Config::parse("seed = 3\n")).seeds();
  const auto b = from_config(Config::parse("seed = 3\nnoise.seed = 99\n")).seeds();
  const auto c = from_config(Config::parse("seed = 4\n")).seeds();
  CHECK(a.data == b.data);
  CHECK(b.noise == 99);
  CHECK(a.noise != b.noise);
  CHECK(a.data != c.data);
  CHECK(a.data != a.init);
}

TEST_CASE("config errors") {
  auto err = [](const std::string& text) {
    try {
      (void)from_config(Config::parse(text, "x.cfg"));
    } catch (const fcl::Error& e) {
      CHECK(e.code() == fcl::ErrorCode::Config);
      return std::string(e.what());
    }
    FAIL("expected config error");
    return std::string();
  };
  CHECK(err("train.epoch = 3\n").find("unknown key 'train.epoch'") != std::string::npos);
  CHECK(err("train.epochs = 3\nloss.mu0 = abc\n").find("x.cfg:2") != std::string::npos);
  CHECK(err("loss.kind = focal\n").find("loss.kind") != std::string::npos);
  CHECK(err("loss.mu0 = 1.5\n").find("mu") != std::string::npos);
  CHECK_FALSE(err("train.epochs = 0\n").empty());
  CHECK_FALSE(err("train.batch_size = 0\n").empty());
  CHECK_FALSE(err("noise.eta = 2\n").empty());
  CHECK_FALSE(err("noise.kind = circular\ndata.classes = 4\nnoise.superclass_size = 3\n").empty());
  CHECK_FALSE(err("data.source = cifar\n").empty());
}

TEST_CASE("prepare_data: clean validation and test, noisy train") {
  const auto cfg = small("noise.eta = 0.5\n");
  const auto sets = prepare_data(cfg);
  CHECK(sets.train.size() == 480);
  CHECK(sets.val.size() == 120);
  REQUIRE(sets.test.has_value());
  CHECK(sets.test->size() == 200);
  CHECK(sets.report.eta_requested == 0.5);
  CHECK(std::abs(sets.report.eta_realized - 0.5) < 0.1);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < sets.train.size(); ++i) diff += sets.train.labels[i] != sets.train_clean_labels[i];
  CHECK(diff == sets.report.flipped);

  // Validation is identical with and without noise.
  const auto clean = prepare_data(small());
  CHECK(clean.val.labels == sets.val.labels);
  CHECK(clean.test->labels == sets.test->labels);
  // Switching test evaluation off does not change the training data.
  const auto no_test = prepare_data(small("noise.eta = 0.5\ntrain.eval_test = false\n"));
  CHECK_FALSE(no_test.test.has_value());
  CHECK(no_test.train.features == sets.train.features);

  const auto before = prepare_data(small("noise.eta = 0.5\nnoise.before_split = true\n"));
  CHECK(before.val.labels != clean.val.labels);
}

TEST_CASE("run: record shape, freeze and determinism") {
  const auto cfg = small("noise.eta = 0.4\n");
  const auto a = run(cfg);
  REQUIRE(a.rows.size() == 8);
  for (std::size_t e = 0; e < 8; ++e) {
    CHECK(a.rows[e].epoch == e);
    CHECK(a.rows[e].test_acc.has_value());
    CHECK(a.rows[e].val_acc >= 0.0);
    CHECK(a.rows[e].val_acc <= 1.0);
    CHECK(std::isfinite(a.rows[e].mean_train_loss));
  }
  // mu in effect during epochs 0..freeze is mu0; it can first change in the row after the freeze.
  for (std::size_t e = 0; e <= 3; ++e) CHECK(a.rows[e].mu == 0.5);
  CHECK(a.rows[7].mu != 0.5);
  CHECK(a.rows[0].lr == 1e-3);
  CHECK(a.config.at("noise.eta") == "0.4");

  const auto b = run(cfg);
  CHECK(record_to_csv(a) == record_to_csv(b));
  CHECK(record_to_json(a) == record_to_json(b));

  const auto frozen = run(small("mu.freeze_epochs = 8\n"));
  for (const auto& r : frozen.rows) CHECK(r.mu == 0.5);

  const auto ce_run = run(small("loss.kind = ce\nloss.mu0 = 0.3\n"));
  for (const auto& r : ce_run.rows) CHECK(r.mu == 0.3);
}

TEST_CASE("run: learns separable blobs") {
  std::optional<fcl::net::MlpModel> model;
  const auto rec = run(small("data.separation = 8\nloss.kind = ce\noptim.lr = 0.01\n"), &model);
  REQUIRE(model.has_value());
  CHECK(rec.rows.back().test_acc.value() > 0.97);
  CHECK(rec.rows.back().mean_train_loss < rec.rows.front().mean_train_loss);
  const auto sets = prepare_data(small("data.separation = 8\n"));
  CHECK(evaluate(*model, *sets.test) == rec.rows.back().test_acc.value());
}

TEST_CASE("run: non-finite loss names the batch") {
  // A huge learning rate with no clipping drives the logits to overflow.
  bool threw = false;
  try {
    (void)run(small("optim.lr = 1e300\noptim.clip_norm = 1e308\nloss.kind = ce\n"));
  } catch (const fcl::Error& e) {
    threw = true;
    CHECK(e.code() == fcl::ErrorCode::Numeric);
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("evaluate: ties go to the lowest class") {
  std::vector<fcl::net::DenseLayer> layers(1);
  layers[0].weight = fcl::net::Matrix::Zero(2, 3);
  layers[0].bias = fcl::net::Vector::Zero(2);
  const fcl::net::MlpModel uniform(layers);
  fcl::data::Dataset ds;
  ds.dim = 3;
  ds.num_classes = 2;
  ds.features.assign(12, 0.5);
  ds.labels = {0, 1, 0, 1};
  CHECK(evaluate(uniform, ds) == 0.5);
  ds.labels = {0, 0, 0, 1};
  CHECK(evaluate(uniform, ds) == 0.75);
  ds.dim = 4;
  ds.features.assign(16, 0.5);
  CHECK_THROWS_AS(evaluate(uniform, ds), fcl::Error);
}

TEST_CASE("csv, json and report output") {
  const auto rec = run(small());
  const auto csv = record_to_csv(rec);
  CHECK(csv.rfind("epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  fcl_test::TempDir dir("exp");
  write_run(rec, dir / rec.run_id);
  CHECK(std::filesystem::exists(dir / rec.run_id / "run.json"));
  CHECK_FALSE(std::filesystem::exists(dir / rec.run_id / "model.bin"));
  const auto back = read_record_csv(dir / rec.run_id / "run.csv");
  CHECK(back.run_id == rec.run_id);
  REQUIRE(back.rows.size() == rec.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].val_acc == rec.rows[i].val_acc);
    CHECK(back.rows[i].mu == rec.rows[i].mu);
    CHECK(back.rows[i].mean_train_loss == rec.rows[i].mean_train_loss);
  }

  const auto j = nlohmann::json::parse(record_to_json(rec));
  CHECK(j.at("run_id") == rec.run_id);
  CHECK(j.at("config").at("loss.kind") == "fcl");
  CHECK(j.at("epochs").size() == 8);
  CHECK(j.contains("noise"));

  const auto rows = report_rows(rec);
  for (const char* series : {",val_acc,", ",mu,", ",train_acc,", ",test_acc,", ",lr,", ",mean_train_loss,"}) {
    CAPTURE(series);
    std::size_t n = 0;
    for (std::size_t pos = rows.find(series); pos != std::string::npos; pos = rows.find(series, pos + 1)) ++n;
    CHECK(n == 8);
  }

  fcl_test::spit(dir / "bad.csv", "epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr\n0,1,2\n");
  CHECK_THROWS_AS(read_record_csv(dir / "bad.csv"), fcl::Error);
  fcl_test::spit(dir / "header.csv", "epoch,loss\n");
  CHECK_THROWS_AS(read_record_csv(dir / "header.csv"), fcl::Error);
  CHECK_THROWS_AS(read_record_csv(dir / "none.csv"), fcl::Error);
}

TEST_CASE("sweep") {
  auto base = small("train.epochs = 4\n");
  const auto single = sweep(base, {0.0}, {"fcl"}, {});
  REQUIRE(single.cells.size() == 1);
  REQUIRE(single.cells[0].record.has_value());
  CHECK(record_to_csv(*single.cells[0].record) == record_to_csv(run(base)));

  fcl_test::TempDir dir("sweep");
  base.output_dir = dir.path();
  const auto grid = sweep(base, {0.0, 0.4}, {"ce", "fcl", "nce+mae"}, {1, 2}, 3);
  CHECK(grid.cells.size() == 12);
  const auto summary = summary_csv(grid);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 13);
  CHECK(fcl_test::slurp(dir / "summary.csv") == summary);
  CHECK(std::filesystem::exists(dir / "nce-mae_eta0.4_s2" / "run.csv"));

  // Parallel and serial sweeps agree.
  base.output_dir.clear();
  const auto serial = sweep(base, {0.0, 0.4}, {"ce", "fcl", "nce+mae"}, {1, 2}, 1);
  CHECK(summary_csv(serial) == summary);

  // A failing cell is marked and the rest continue.
  auto bad = small("train.epochs = 2\noptim.lr = 1e300\noptim.clip_norm = 1e308\n");
  const auto mixed = sweep(bad, {0.0}, {"ce", "mae"}, {});
  CHECK(mixed.cells.size() == 2);
  CHECK(std::any_of(mixed.cells.begin(), mixed.cells.end(), [](const SweepCell& c) { return !c.error.empty(); }));
  CHECK(summary_csv(mixed).find("failed") != std::string::npos);

  CHECK_THROWS_AS(sweep(base, {}, {"ce"}, {}), fcl::Error);
}

TEST_CASE("shipped configs parse and validate") {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(FCL_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(from_config(Config::load(entry.path())));
    ++seen;
  }
  CHECK(seen >= 3);
  const auto cfg = from_config(Config::load(std::filesystem::path(FCL_CONFIG_DIR) / "blobs_fcl.cfg"));
  CHECK(cfg.noise.eta == 0.4);
  CHECK(cfg.resolved_run_id() == "fcl_eta0.4_s1");
}
