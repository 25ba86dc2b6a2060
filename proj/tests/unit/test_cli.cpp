#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "support.hpp"

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const fcl_test::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto log = dir / "cli.log";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" FCL_LAB_PATH "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, fcl_test::slurp(log)};
}

const std::string kSmall = "-s data.n=300 -s data.test_n=100 -s train.epochs=4 -s model.hidden=8";

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("train writes one csv row per epoch and echoes overrides") {
  fcl_test::TempDir dir("cli_train");
  auto r = run(dir, "train -q " + kSmall + " -s loss.mu0=0.75 -o out");
  REQUIRE(r.code == 0);
  const auto csv = fcl_test::slurp(dir / "out" / "fcl_eta0_s1" / "run.csv");
  CHECK(csv.rfind("epoch,mean_train_loss,train_acc,val_acc,test_acc,mu,lr\n", 0) == 0);
  CHECK(count_lines(csv) == 5);
  const auto json = fcl_test::slurp(dir / "out" / "fcl_eta0_s1" / "run.json");
  CHECK(json.find("\"loss.mu0\": \"0.75\"") != std::string::npos);
}

TEST_CASE("config files and errors") {
  fcl_test::TempDir dir("cli_cfg");
  fcl_test::spit(dir / "a.cfg", "# small\ndata.n = 300\ntrain.epochs = 2\nmodel.hidden = 8\nloss.kind = ce\n");
  auto r = run(dir, "train -q -c a.cfg -o out");
  CHECK(r.code == 0);
  CHECK(fcl_test::slurp(dir / "out" / "ce_eta0_s1" / "run.csv").size() > 0);

  r = run(dir, "train -c missing.cfg");
  CHECK(r.code == 2);
  CHECK(r.out.find("not found") != std::string::npos);

  r = run(dir, "train -s train.epochs=0");
  CHECK(r.code == 2);
  r = run(dir, "frobnicate");
  CHECK(r.code == 2);
  r = run(dir, "");
  CHECK(r.code == 2);
}

TEST_CASE("output directory from the environment") {
  fcl_test::TempDir dir("cli_env");
  auto r = run(dir, "train -q " + kSmall, "FCL_OUTPUT_DIR=envruns");
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "envruns" / "fcl_eta0_s1" / "run.csv"));
}

TEST_CASE("verify exit codes") {
  fcl_test::TempDir dir("cli_verify");
  auto r = run(dir, "verify");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  r = run(dir, "verify --inject-fault");
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("noisify") {
  fcl_test::TempDir dir("cli_noisify");
  std::ostringstream labels;
  for (int i = 0; i < 2000; ++i) labels << i % 10 << '\n';
  fcl_test::spit(dir / "y.txt", labels.str());

  auto r = run(dir, "noisify y.txt clean.txt --kind symmetric --eta 0");
  REQUIRE(r.code == 0);
  CHECK(fcl_test::slurp(dir / "clean.txt") == labels.str());
  CHECK(std::filesystem::exists(dir / "clean.txt.flips.json"));

  r = run(dir, "noisify y.txt a.txt --kind asymmetric --eta 0.6 --pairs mnist --seed 9");
  REQUIRE(r.code == 0);
  r = run(dir, "noisify y.txt b.txt --kind asymmetric --eta 0.6 --pairs mnist --seed 9 --report b.json");
  REQUIRE(r.code == 0);
  const auto a = fcl_test::slurp(dir / "a.txt");
  CHECK(a == fcl_test::slurp(dir / "b.txt"));
  CHECK(std::filesystem::exists(dir / "b.json"));

  std::istringstream in(labels.str()), out(a);
  std::set<int> flipped_from;
  int y = 0, z = 0;
  while (in >> y && out >> z)
    if (y != z) flipped_from.insert(y);
  CHECK(flipped_from == std::set<int>{2, 3, 5, 6, 7});

  r = run(dir, "noisify y.txt c.txt --kind symmetric --eta 1.5");
  CHECK(r.code == 2);
  r = run(dir, "noisify nope.txt c.txt --kind symmetric --eta 0.2");
  CHECK(r.code != 0);
}

TEST_CASE("sweep and report") {
  fcl_test::TempDir dir("cli_sweep");
  auto r = run(dir, "sweep " + kSmall + " --losses fcl --seeds 1 -j 2 -o sw");
  REQUIRE(r.code == 0);
  const auto summary = fcl_test::slurp(dir / "sw" / "summary.csv");
  CHECK(count_lines(summary) == 6);

  r = run(dir, "report sw -o report.csv");
  REQUIRE(r.code == 0);
  std::istringstream rep(fcl_test::slurp(dir / "report.csv"));
  std::string line;
  std::getline(rep, line);
  CHECK(line == "run_id,series,epoch,value");
  std::map<std::string, std::map<std::string, int>> rows;
  while (std::getline(rep, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    ++rows[line.substr(0, c1)][line.substr(c1 + 1, c2 - c1 - 1)];
  }
  CHECK(rows.size() == 5);
  for (const auto& [id, series] : rows) {
    CAPTURE(id);
    CHECK(!series.empty());
    for (const auto& [name, n] : series) CHECK(n == 4);
  }

  fcl_test::spit(dir / "junk" / "run.csv", "not,a,run\n");
  r = run(dir, "report junk -o bad.csv");
  CHECK(r.code == 1);
}
