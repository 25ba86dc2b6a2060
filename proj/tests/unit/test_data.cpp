#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "data.hpp"
#include "error.hpp"
#include "support.hpp"

using namespace fcl::data;
using fcl_test::TempDir;
using fcl::IdxError;

namespace {

void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

// Four 28x28 images; pixel (i, r, c) = (i * 31 + r * 7 + c) % 256.
std::string image_fixture(std::uint32_t count = 4, std::uint32_t magic = 0x803) {
  std::string b;
  put_be32(b, magic);
  put_be32(b, count);
  put_be32(b, 28);
  put_be32(b, 28);
  for (std::uint32_t i = 0; i < 4; ++i)
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) b.push_back(static_cast<char>((i * 31 + r * 7 + c) % 256));
  return b;
}

std::string label_fixture(const std::vector<std::uint8_t>& labels, std::uint32_t magic = 0x801) {
  std::string b;
  put_be32(b, magic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  for (auto l : labels) b.push_back(static_cast<char>(l));
  return b;
}

IdxError::Kind idx_kind(const std::filesystem::path& img, const std::filesystem::path& lbl) {
  try {
    (void)read_idx(img, lbl);
  } catch (const IdxError& e) {
    return e.kind();
  }
  FAIL("expected IdxError");
  return IdxError::Kind::Open;
}

} // namespace

TEST_CASE("blobs: shape, balance, scaling, determinism") {
  const auto ds = generate_blobs(1003, 4, 10, 2.0, 7);
  CHECK(ds.size() == 1003);
  CHECK(ds.dim == 10);
  CHECK(ds.num_classes == 4);
  std::vector<std::size_t> counts(4, 0);
  for (auto l : ds.labels) ++counts[l];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*hi - *lo <= 1);
  for (double f : ds.features) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK_NOTHROW(ds.validate());

  const auto again = generate_blobs(1003, 4, 10, 2.0, 7);
  CHECK(again.features == ds.features);
  CHECK(again.labels == ds.labels);
  CHECK(generate_blobs(1003, 4, 10, 2.0, 8).features != ds.features);

  // More classes than dimensions uses the circle layout.
  const auto circle = generate_blobs(500, 8, 3, 3.0, 1);
  CHECK(circle.size() == 500);
  CHECK_NOTHROW(circle.validate());

  CHECK_THROWS_AS(generate_blobs(3, 4, 10, 2.0, 1), fcl::Error);
  CHECK_THROWS_AS(generate_blobs(100, 1, 10, 2.0, 1), fcl::Error);
  CHECK_THROWS_AS(generate_blobs(100, 4, 1, 2.0, 1), fcl::Error);
  CHECK_THROWS_AS(generate_blobs(100, 4, 10, 0.0, 1), fcl::Error);
}

TEST_CASE("blobs: well separated clusters are linearly separable") {
  const auto ds = generate_blobs(1000, 2, 5, 10.0, 3);
  // Nearest class mean is a linear rule.
  std::vector<std::vector<double>> mean(2, std::vector<double>(ds.dim, 0.0));
  std::vector<double> n(2, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.dim; ++j) mean[ds.labels[i]][j] += r[j];
    n[ds.labels[i]] += 1.0;
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : mean[c]) v /= n[c];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double d[2] = {0.0, 0.0};
    for (int c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < ds.dim; ++j) d[c] += std::pow(ds.row(i)[j] - mean[c][j], 2);
    correct += (d[1] < d[0] ? 1u : 0u) == ds.labels[i];
  }
  CHECK(static_cast<double>(correct) / ds.size() >= 0.99);
}

TEST_CASE("idx: handcrafted fixture") {
  TempDir dir("idx");
  fcl_test::spit(dir / "img", image_fixture());
  fcl_test::spit(dir / "lbl", label_fixture({3, 1, 4, 1}));
  const auto ds = read_idx(dir / "img", dir / "lbl");
  CHECK(ds.size() == 4);
  CHECK(ds.dim == 784);
  CHECK(ds.num_classes == 5);
  CHECK(ds.labels == std::vector<Label>{3, 1, 4, 1});
  CHECK(ds.row(0)[0] == 0.0);
  CHECK(ds.row(2)[28 * 3 + 5] == ((2 * 31 + 3 * 7 + 5) % 256) / 255.0);
  CHECK(ds.row(3)[783] == ((3 * 31 + 27 * 7 + 27) % 256) / 255.0);
  CHECK(read_idx(dir / "img", dir / "lbl", 10).num_classes == 10);
  CHECK_THROWS_AS(read_idx(dir / "img", dir / "lbl", 3), fcl::Error);
}

TEST_CASE("idx: distinct error kinds") {
  TempDir dir("idxerr");
  fcl_test::spit(dir / "img", image_fixture());
  fcl_test::spit(dir / "lbl", label_fixture({3, 1, 4, 1}));
  fcl_test::spit(dir / "lbl3", label_fixture({3, 1, 4}));
  fcl_test::spit(dir / "badimg", image_fixture(4, 0x801));
  fcl_test::spit(dir / "badlbl", label_fixture({1, 2, 3, 4}, 0x803));
  const auto full = image_fixture();
  fcl_test::spit(dir / "shortimg", full.substr(0, full.size() - 10));
  fcl_test::spit(dir / "header", full.substr(0, 6));
  fcl_test::spit(dir / "bigcount", image_fixture(5));

  CHECK(idx_kind(dir / "img", dir / "lbl3") == IdxError::Kind::CountMismatch);
  CHECK(idx_kind(dir / "badimg", dir / "lbl") == IdxError::Kind::Magic);
  CHECK(idx_kind(dir / "img", dir / "badlbl") == IdxError::Kind::Magic);
  CHECK(idx_kind(dir / "shortimg", dir / "lbl") == IdxError::Kind::Truncated);
  CHECK(idx_kind(dir / "header", dir / "lbl") == IdxError::Kind::Truncated);
  CHECK(idx_kind(dir / "bigcount", dir / "lbl") == IdxError::Kind::Truncated);
  CHECK(idx_kind(dir / "nope", dir / "lbl") == IdxError::Kind::Open);
  try {
    (void)read_idx(dir / "badimg", dir / "lbl");
  } catch (const fcl::Error& e) {
    CHECK(e.code() == fcl::ErrorCode::Format);
  }
}

TEST_CASE("idx: write/read round trip") {
  TempDir dir("idxrt");
  const auto ds = generate_blobs(50, 3, 12, 2.0, 4);
  write_idx(ds, dir / "img", dir / "lbl", 3);
  const auto back = read_idx(dir / "img", dir / "lbl", 3);
  CHECK(back.labels == ds.labels);
  CHECK(back.dim == 12);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    CHECK(std::abs(back.features[i] - ds.features[i]) <= 0.5 / 255.0 + 1e-12);
  }
  CHECK_THROWS_AS(write_idx(ds, dir / "x", dir / "y", 5), fcl::Error);
}

TEST_CASE("label files") {
  TempDir dir("labels");
  const std::vector<Label> y = {0, 5, 3, 9, 9, 1};
  write_label_file(y, dir / "a.txt");
  write_label_file(y, dir / "a.csv");
  write_label_file(y, dir / "a.idx");
  CHECK(read_label_file(dir / "a.txt") == y);
  CHECK(read_label_file(dir / "a.csv") == y);
  CHECK(read_label_file(dir / "a.idx") == y);
  CHECK(read_idx_labels(dir / "a.idx") == y);
  CHECK(fcl_test::slurp(dir / "a.txt") == "0\n5\n3\n9\n9\n1\n");
  fcl_test::spit(dir / "bad.txt", "1\nx\n");
  CHECK_THROWS_AS(read_label_file(dir / "bad.txt"), fcl::Error);
  CHECK_THROWS_AS(read_label_file(dir / "missing.txt"), fcl::Error);
}

TEST_CASE("csv export") {
  TempDir dir("csv");
  Dataset ds;
  ds.dim = 2;
  ds.num_classes = 2;
  ds.features = {0.5, 0.25, 1.0, 0.0};
  ds.labels = {1, 0};
  write_csv(ds, dir / "d.csv");
  CHECK(fcl_test::slurp(dir / "d.csv") == "f0,f1,label\n0.5,0.25,1\n1,0,0\n");
}

TEST_CASE("split") {
  const auto ds = generate_blobs(10, 2, 3, 2.0, 1);
  const auto [train, val] = split(ds, {0.2, 5});
  CHECK(train.size() == 8);
  CHECK(val.size() == 2);

  const auto [ti, vi] = split_indices(1000, {0.2, 5});
  CHECK(vi.size() == 200);
  std::vector<std::size_t> all(ti);
  all.insert(all.end(), vi.begin(), vi.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(1000);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(all == expect);
  CHECK(split_indices(1000, {0.2, 5}) == split_indices(1000, {0.2, 5}));
  CHECK(split_indices(1000, {0.2, 5}).second != split_indices(1000, {0.2, 6}).second);

  CHECK_THROWS_AS(split_indices(3, {0.1, 1}), fcl::Error);   // empty val
  CHECK_THROWS_AS(split_indices(10, {0.0, 1}), fcl::Error);
  CHECK_THROWS_AS(split_indices(10, {1.0, 1}), fcl::Error);
}

TEST_CASE("batches") {
  const auto b = batches(10, 3, 1);
  REQUIRE(b.size() == 4);
  CHECK(b[0].size() == 3);
  CHECK(b[3].size() == 1);
  std::vector<std::size_t> flat;
  for (const auto& s : b) flat.insert(flat.end(), s.begin(), s.end());
  auto sorted = flat;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expect(10);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);

  const auto c = batches(1000, 128, 2);
  const auto d = batches(1000, 128, 3);
  CHECK(c != d);
  CHECK(batches(1000, 128, 2) == c);
  CHECK_THROWS_AS(batches(10, 0, 1), fcl::Error);
}

TEST_CASE("subset and validation") {
  const auto ds = generate_blobs(20, 2, 3, 2.0, 1);
  const std::vector<std::size_t> idx = {3, 0, 7};
  const auto s = subset(ds, idx);
  CHECK(s.size() == 3);
  CHECK(s.labels[0] == ds.labels[3]);
  CHECK(std::equal(s.row(2).begin(), s.row(2).end(), ds.row(7).begin()));

  Dataset bad = ds;
  bad.labels[0] = 5;
  CHECK_THROWS_AS(bad.validate(), fcl::Error);
  bad = ds;
  bad.features[1] = NAN;
  CHECK_THROWS_AS(bad.validate(), fcl::Error);
  CHECK_THROWS_AS(Dataset{}.validate(), fcl::Error);
}
