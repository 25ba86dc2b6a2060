#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fcl::noise {

using Label = std::uint32_t;

enum class NoiseKind { None, Symmetric, Asymmetric, SuperclassCircular };

NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseKind kind);

struct PairMapEntry {
  Label from;
  Label to;
  bool operator==(const PairMapEntry&) const = default;
};

using PairMap = std::vector<PairMapEntry>;

/// Named asymmetric maps: "mnist" (7->1, 2->7, 5<->6, 3->8) and
/// "cifar10" (truck->automobile, bird->airplane, deer->horse, cat<->dog).
PairMap preset_pair_map(std::string_view name);

/// Parses "7:1,2:7,5<>6"; "a<>b" expands to both directions.
PairMap parse_pair_map(std::string_view text);
std::string format_pair_map(const PairMap& map);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double eta = 0.0;
  PairMap pair_map;
  std::size_t superclass_size = 5;
  std::uint64_t seed = 0;
};

/// Throws Error(Parameter) if the spec is inconsistent with K classes.
void validate(const NoiseSpec& spec, std::size_t num_classes);

struct NoiseResult {
  std::vector<Label> labels;
  std::vector<bool> flipped;
};

NoiseResult corrupt_symmetric(std::span<const Label> labels, std::size_t num_classes, double eta,
                              std::uint64_t seed);
NoiseResult corrupt_asymmetric(std::span<const Label> labels, std::size_t num_classes,
                               const PairMap& pair_map, double eta, std::uint64_t seed);
NoiseResult corrupt_superclass_circular(std::span<const Label> labels, std::size_t num_classes,
                                        std::size_t superclass_size, double eta, std::uint64_t seed);

/// Dispatch on spec.kind. NoiseKind::None returns the labels untouched.
NoiseResult corrupt(std::span<const Label> labels, std::size_t num_classes, const NoiseSpec& spec);

struct FlipReport {
  double eta_requested = 0.0;
  double eta_realized = 0.0;
  std::vector<std::size_t> per_class_flip_counts;  // indexed by clean (source) class
  std::uint64_t seed = 0;
  std::size_t total = 0;
  std::size_t flipped = 0;
};

FlipReport make_report(std::span<const Label> clean, const NoiseResult& result,
                       std::size_t num_classes, const NoiseSpec& spec);

/// {"eta_requested", "eta_realized", "per_class_flip_counts", "seed", ...} as JSON text.
std::string report_to_json(const FlipReport& report, const NoiseSpec& spec);

} // namespace fcl::noise
