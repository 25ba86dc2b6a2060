#include "noise.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace fcl::noise {

namespace {

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    std::ostringstream msg;
    msg << "noise rate eta = " << eta << " outside [0, 1]";
    throw Error(ErrorCode::Parameter, msg.str());
  }
}

void check_labels(std::span<const Label> labels, std::size_t num_classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      std::ostringstream msg;
      msg << "label " << labels[i] << " at index " << i << " out of range for K = " << num_classes;
      throw Error(ErrorCode::Parameter, msg.str());
    }
  }
}

} // namespace

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "none") return NoiseKind::None;
  if (name == "symmetric") return NoiseKind::Symmetric;
  if (name == "asymmetric") return NoiseKind::Asymmetric;
  if (name == "circular" || name == "superclass_circular") return NoiseKind::SuperclassCircular;
  throw Error(ErrorCode::Parameter, "unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
  case NoiseKind::None: return "none";
  case NoiseKind::Symmetric: return "symmetric";
  case NoiseKind::Asymmetric: return "asymmetric";
  case NoiseKind::SuperclassCircular: return "circular";
  }
  return "?";
}

PairMap preset_pair_map(std::string_view name) {
  if (name == "mnist") {
    return {{7, 1}, {2, 7}, {5, 6}, {6, 5}, {3, 8}};
  }
  if (name == "cifar10") {
    // airplane 0, automobile 1, bird 2, cat 3, deer 4, dog 5, frog 6, horse 7, ship 8, truck 9
    return {{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
  }
  throw Error(ErrorCode::Parameter, "unknown pair-map preset '" + std::string(name) + "'");
}

PairMap parse_pair_map(std::string_view text) {
  PairMap map;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string item(text.substr(pos, comma - pos));
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) {
      bool both = false;
      std::size_t sep = item.find("<>");
      std::size_t sep_len = 2;
      if (sep != std::string::npos) {
        both = true;
      } else {
        sep = item.find(':');
        sep_len = 1;
      }
      if (sep == std::string::npos) {
        throw Error(ErrorCode::Parameter, "pair map entry '" + item + "' needs 'a:b' or 'a<>b'");
      }
      try {
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const std::string a_text = item.substr(0, sep);
        const std::string b_text = item.substr(sep + sep_len);
        const unsigned long a = std::stoul(a_text, &used_a);
        const unsigned long b = std::stoul(b_text, &used_b);
        if (used_a != a_text.size() || used_b != b_text.size()) {
          throw std::invalid_argument("trailing characters");
        }
        map.push_back({static_cast<Label>(a), static_cast<Label>(b)});
        if (both) {
          map.push_back({static_cast<Label>(b), static_cast<Label>(a)});
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::Parameter, "pair map entry '" + item + "' is not numeric");
      }
    }
    pos = comma + 1;
  }
  return map;
}

std::string format_pair_map(const PairMap& map) {
  std::ostringstream out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out << (i ? "," : "") << map[i].from << ':' << map[i].to;
  }
  return out.str();
}

void validate(const NoiseSpec& spec, std::size_t num_classes) {
  check_eta(spec.eta);
  switch (spec.kind) {
  case NoiseKind::None:
    break;
  case NoiseKind::Symmetric:
    if (num_classes < 2) throw Error(ErrorCode::Parameter, "symmetric noise needs K >= 2");
    break;
  case NoiseKind::Asymmetric: {
    std::set<Label> sources;
    for (const auto& e : spec.pair_map) {
      if (e.from >= num_classes || e.to >= num_classes) {
        std::ostringstream msg;
        msg << "pair map entry " << e.from << "->" << e.to << " references a class >= K = "
            << num_classes;
        throw Error(ErrorCode::Parameter, msg.str());
      }
      if (e.from == e.to) {
        throw Error(ErrorCode::Parameter, "pair map entry maps class " + std::to_string(e.from) +
                                              " to itself");
      }
      if (!sources.insert(e.from).second) {
        throw Error(ErrorCode::Parameter,
                    "pair map lists source class " + std::to_string(e.from) + " twice");
      }
    }
    break;
  }
  case NoiseKind::SuperclassCircular:
    if (spec.superclass_size < 2 || num_classes % spec.superclass_size != 0) {
      std::ostringstream msg;
      msg << "superclass size " << spec.superclass_size << " must be >= 2 and divide K = "
          << num_classes;
      throw Error(ErrorCode::Parameter, msg.str());
    }
    break;
  }
}

NoiseResult corrupt_symmetric(std::span<const Label> labels, std::size_t num_classes, double eta,
                              std::uint64_t seed) {
  NoiseSpec spec{NoiseKind::Symmetric, eta, {}, 0, seed};
  validate(spec, num_classes);
  check_labels(labels, num_classes);
  Rng rng(seed);
  NoiseResult out{{labels.begin(), labels.end()}, std::vector<bool>(labels.size(), false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (unit_draw(rng) < eta) {
      // Uniform over the K - 1 other classes.
      const auto offset = 1 + index_draw(rng, num_classes - 1);
      out.labels[i] = static_cast<Label>((labels[i] + offset) % num_classes);
      out.flipped[i] = true;
    }
  }
  return out;
}

NoiseResult corrupt_asymmetric(std::span<const Label> labels, std::size_t num_classes,
                               const PairMap& pair_map, double eta, std::uint64_t seed) {
  NoiseSpec spec{NoiseKind::Asymmetric, eta, pair_map, 0, seed};
  validate(spec, num_classes);
  check_labels(labels, num_classes);
  std::vector<long> target(num_classes, -1);
  for (const auto& e : pair_map) {
    target[e.from] = static_cast<long>(e.to);
  }
  Rng rng(seed);
  NoiseResult out{{labels.begin(), labels.end()}, std::vector<bool>(labels.size(), false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // One draw per sample regardless of class keeps the stream aligned with the input.
    const double draw = unit_draw(rng);
    const long to = target[labels[i]];
    if (to >= 0 && draw < eta) {
      out.labels[i] = static_cast<Label>(to);
      out.flipped[i] = true;
    }
  }
  return out;
}

NoiseResult corrupt_superclass_circular(std::span<const Label> labels, std::size_t num_classes,
                                        std::size_t superclass_size, double eta,
                                        std::uint64_t seed) {
  NoiseSpec spec{NoiseKind::SuperclassCircular, eta, {}, superclass_size, seed};
  validate(spec, num_classes);
  check_labels(labels, num_classes);
  Rng rng(seed);
  NoiseResult out{{labels.begin(), labels.end()}, std::vector<bool>(labels.size(), false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (unit_draw(rng) < eta) {
      const std::size_t c = labels[i];
      const std::size_t block = c / superclass_size;
      out.labels[i] = static_cast<Label>(block * superclass_size + (c % superclass_size + 1) % superclass_size);
      out.flipped[i] = true;
    }
  }
  return out;
}

NoiseResult corrupt(std::span<const Label> labels, std::size_t num_classes, const NoiseSpec& spec) {
  switch (spec.kind) {
  case NoiseKind::Symmetric:
    return corrupt_symmetric(labels, num_classes, spec.eta, spec.seed);
  case NoiseKind::Asymmetric:
    return corrupt_asymmetric(labels, num_classes, spec.pair_map, spec.eta, spec.seed);
  case NoiseKind::SuperclassCircular:
    return corrupt_superclass_circular(labels, num_classes, spec.superclass_size, spec.eta, spec.seed);
  case NoiseKind::None:
    break;
  }
  validate(spec, num_classes);
  check_labels(labels, num_classes);
  return {{labels.begin(), labels.end()}, std::vector<bool>(labels.size(), false)};
}

FlipReport make_report(std::span<const Label> clean, const NoiseResult& result,
                       std::size_t num_classes, const NoiseSpec& spec) {
  FlipReport report;
  report.eta_requested = spec.eta;
  report.seed = spec.seed;
  report.total = clean.size();
  report.per_class_flip_counts.assign(num_classes, 0);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (result.flipped[i]) {
      ++report.flipped;
      ++report.per_class_flip_counts[clean[i]];
    }
  }
  report.eta_realized =
      report.total == 0 ? 0.0 : static_cast<double>(report.flipped) / static_cast<double>(report.total);
  return report;
}

std::string report_to_json(const FlipReport& report, const NoiseSpec& spec) {
  nlohmann::ordered_json j;
  j["eta_requested"] = report.eta_requested;
  j["eta_realized"] = report.eta_realized;
  j["per_class_flip_counts"] = report.per_class_flip_counts;
  j["seed"] = report.seed;
  j["kind"] = std::string(to_string(spec.kind));
  j["total"] = report.total;
  j["flipped"] = report.flipped;
  if (spec.kind == NoiseKind::Asymmetric) {
    j["pair_map"] = format_pair_map(spec.pair_map);
  }
  if (spec.kind == NoiseKind::SuperclassCircular) {
    j["superclass_size"] = spec.superclass_size;
  }
  return j.dump(2) + "\n";
}

} // namespace fcl::noise
