#include "data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "error.hpp"
#include "random.hpp"

namespace fcl::data {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path, const char* what) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) {
    throw IdxError(IdxError::Kind::Truncated,
                   path.string() + ": truncated while reading " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IdxError(IdxError::Kind::Open, "cannot open " + path.string());
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  }
  return out;
}

std::vector<unsigned char> read_bytes(std::istream& in, std::size_t count,
                                      const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    std::ostringstream msg;
    msg << path.string() << ": expected " << count << " payload bytes, found " << in.gcount();
    throw IdxError(IdxError::Kind::Truncated, msg.str());
  }
  return bytes;
}

bool is_text_labels(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".txt" || ext == ".csv";
}

} // namespace

void Dataset::validate() const {
  if (labels.empty()) {
    throw Error(ErrorCode::Parameter, "dataset is empty");
  }
  if (dim == 0 || features.size() != labels.size() * dim) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix size does not match N x d");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      std::ostringstream msg;
      msg << "label " << labels[i] << " at row " << i << " >= K = " << num_classes;
      throw Error(ErrorCode::Parameter, msg.str());
    }
  }
  if (!std::all_of(features.begin(), features.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::Numeric, "dataset contains non-finite features");
  }
}

Dataset generate_blobs(std::size_t n, std::size_t num_classes, std::size_t dim, double separation,
                       std::uint64_t seed) {
  if (num_classes < 2 || n < num_classes || dim < 2 || !(separation > 0.0)) {
    std::ostringstream msg;
    msg << "invalid blob shape: N=" << n << " K=" << num_classes << " d=" << dim
        << " separation=" << separation << " (need K >= 2, N >= K, d >= 2, separation > 0)";
    throw Error(ErrorCode::Parameter, msg.str());
  }
  std::vector<double> means(num_classes * dim, 0.0);
  if (num_classes <= dim) {
    // Scaled basis vectors: pairwise distance = separation.
    for (std::size_t c = 0; c < num_classes; ++c) {
      means[c * dim + c] = separation / std::numbers::sqrt2;
    }
  } else {
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(num_classes)));
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
      means[c * dim] = radius * std::cos(angle);
      means[c * dim + 1] = radius * std::sin(angle);
    }
  }

  Dataset ds;
  ds.num_classes = num_classes;
  ds.dim = dim;
  ds.labels.resize(n);
  ds.features.resize(n * dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;
    ds.labels[i] = static_cast<Label>(c);
    for (std::size_t j = 0; j < dim; ++j) {
      ds.features[i * dim + j] = means[c * dim + j] + normal_draw(rng);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    double lo = ds.features[j];
    double hi = lo;
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, ds.features[i * dim + j]);
      hi = std::max(hi, ds.features[i * dim + j]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      ds.features[i * dim + j] = (ds.features[i * dim + j] - lo) / span;
    }
  }
  return ds;
}

std::vector<Label> read_idx_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto magic = read_be32(in, path, "magic");
  if (magic != kIdxLabelsMagic) {
    std::ostringstream msg;
    msg << path.string() << ": bad IDX label magic 0x" << std::hex << magic;
    throw IdxError(IdxError::Kind::Magic, msg.str());
  }
  const auto count = read_be32(in, path, "label count");
  const auto bytes = read_bytes(in, count, path);
  return {bytes.begin(), bytes.end()};
}

void write_idx_labels(std::span<const Label> labels, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (Label l : labels) {
    if (l > 255) {
      throw Error(ErrorCode::Format, "label " + std::to_string(l) + " does not fit an IDX byte");
    }
    out.put(static_cast<char>(l));
  }
  if (!out) {
    throw Error(ErrorCode::Io, "failed writing " + path.string());
  }
}

Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes) {
  auto in = open_in(images);
  const auto magic = read_be32(in, images, "magic");
  if (magic != kIdxImagesMagic) {
    std::ostringstream msg;
    msg << images.string() << ": bad IDX image magic 0x" << std::hex << magic;
    throw IdxError(IdxError::Kind::Magic, msg.str());
  }
  const auto count = read_be32(in, images, "image count");
  const auto rows = read_be32(in, images, "row count");
  const auto cols = read_be32(in, images, "column count");
  const std::size_t dim = std::size_t{rows} * cols;
  const auto pixels = read_bytes(in, std::size_t{count} * dim, images);

  Dataset ds;
  ds.labels = read_idx_labels(labels);
  if (ds.labels.size() != count) {
    std::ostringstream msg;
    msg << "label count " << ds.labels.size() << " in " << labels.string()
        << " does not match image count " << count << " in " << images.string();
    throw IdxError(IdxError::Kind::CountMismatch, msg.str());
  }
  ds.dim = dim;
  ds.features.resize(pixels.size());
  std::transform(pixels.begin(), pixels.end(), ds.features.begin(),
                 [](unsigned char b) { return static_cast<double>(b) / 255.0; });
  const Label max_label = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.num_classes = num_classes != 0 ? num_classes : std::max<std::size_t>(2, max_label + 1);
  ds.validate();
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::size_t rows) {
  if (rows == 0) {
    rows = 1;
  }
  if (ds.dim % rows != 0) {
    throw Error(ErrorCode::Parameter, "IDX rows must divide the feature dimension");
  }
  auto out = open_out(images);
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(ds.size()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(ds.dim / rows));
  for (double v : ds.features) {
    const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(scaled)));
  }
  if (!out) {
    throw Error(ErrorCode::Io, "failed writing " + images.string());
  }
  write_idx_labels(ds.labels, labels);
}

std::vector<Label> read_label_file(const std::filesystem::path& path) {
  if (!is_text_labels(path)) {
    return read_idx_labels(path);
  }
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    if (line_no == 1 && token == "label") {
      continue;
    }
    if (!std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw Error(ErrorCode::Format,
                  path.string() + ":" + std::to_string(line_no) + ": '" + token + "' is not a label");
    }
    labels.push_back(static_cast<Label>(std::stoul(token)));
  }
  return labels;
}

void write_label_file(std::span<const Label> labels, const std::filesystem::path& path) {
  if (!is_text_labels(path)) {
    write_idx_labels(labels, path);
    return;
  }
  auto out = open_out(path);
  for (Label l : labels) {
    out << l << '\n';
  }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < ds.dim; ++j) {
    out << 'f' << j << ',';
  }
  out << "label\n";
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) {
      out << v << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.dim = ds.dim;
  out.labels.reserve(indices.size());
  out.features.reserve(indices.size() * ds.dim);
  for (std::size_t i : indices) {
    if (i >= ds.size()) {
      throw Error(ErrorCode::Parameter, "subset index out of range");
    }
    out.labels.push_back(ds.labels[i]);
    const auto r = ds.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            const SplitSpec& spec) {
  if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0)) {
    throw Error(ErrorCode::Parameter, "val_fraction must lie in (0, 1)");
  }
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction));
  if (n_val == 0 || n_val >= n) {
    std::ostringstream msg;
    msg << "split of N = " << n << " at fraction " << spec.val_fraction << " leaves an empty side";
    throw Error(ErrorCode::Parameter, msg.str());
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(spec.seed);
  shuffle<std::size_t>(perm, rng);
  std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const auto [train, val] = split_indices(ds.size(), spec);
  return {subset(ds, train), subset(ds, val)};
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
  if (batch_size == 0) {
    throw Error(ErrorCode::Parameter, "batch_size must be >= 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(epoch_seed);
  shuffle<std::size_t>(order, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

} // namespace fcl::data
