#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "noise.hpp"

namespace fcl::data {

using noise::Label;

/// Row-major N x d feature matrix with one class label per row.
struct Dataset {
  std::vector<double> features;
  std::vector<Label> labels;
  std::size_t num_classes = 0;
  std::size_t dim = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }

  /// Throws Error(Parameter) unless N > 0, labels < K and features are finite.
  void validate() const;
};

/// K Gaussian clusters with unit covariance. Class means sit on scaled simplex
/// vertices (K <= d) or on a circle in the first two coordinates (K > d), with
/// neighbouring means `separation` apart. Labels are balanced (i mod K) and
/// features are min-max scaled to [0, 1] per coordinate.
Dataset generate_blobs(std::size_t n, std::size_t num_classes, std::size_t dim, double separation,
                       std::uint64_t seed);

/// Reads an IDX3 image file (magic 0x00000803) and IDX1 label file
/// (0x00000801). Pixels are scaled by 1/255. num_classes = 0 infers max label + 1.
Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 0);

/// Writes features as unsigned bytes (round(255 x), clamped) in a rows x cols
/// layout; rows * cols must equal ds.dim. rows = 0 writes 1 x dim.
void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::size_t rows = 0);

std::vector<Label> read_idx_labels(const std::filesystem::path& path);
void write_idx_labels(std::span<const Label> labels, const std::filesystem::path& path);

/// Label files: IDX1 unless the extension is .txt or .csv (one label per line).
std::vector<Label> read_label_file(const std::filesystem::path& path);
void write_label_file(std::span<const Label> labels, const std::filesystem::path& path);

/// CSV with header f0,...,f{d-1},label.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

struct SplitSpec {
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Seeded disjoint partition; |val| = round(N * val_fraction).
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Index-level split used by split(); returns (train indices, val indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            const SplitSpec& spec);

/// Seeded shuffle of 0..n-1 cut into contiguous slices; the last may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t epoch_seed);

} // namespace fcl::data
