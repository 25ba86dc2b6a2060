#include "net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "error.hpp"
#include "random.hpp"

namespace fcl::net {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kCheckpointMagic[8] = {'F', 'C', 'L', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kCheckpointVersion = 1;

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

void softmax_rows(Matrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw Error(ErrorCode::Format, "truncated checkpoint " + path.string());
  }
  return value;
}

} // namespace

MlpModel::MlpModel(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) {
    throw Error(ErrorCode::Parameter, "MLP needs at least input and output widths");
  }
  for (std::size_t w : widths) {
    if (w == 0) {
      throw Error(ErrorCode::Parameter, "MLP layer width must be positive");
    }
  }
  if (widths.back() < 2) {
    throw Error(ErrorCode::Parameter, "MLP needs at least 2 output classes");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(widths[i]);
    const auto out = static_cast<Eigen::Index>(widths[i + 1]);
    // He-uniform: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weight(r, c) = limit * (2.0 * unit_draw(rng) - 1.0);
      }
    }
    layers_.push_back(std::move(layer));
  }
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  check_chain();
}

void MlpModel::check_chain() const {
  if (layers_.empty()) {
    throw Error(ErrorCode::Parameter, "MLP has no layers");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != l.bias.size() || l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw Error(ErrorCode::DimensionMismatch, "layer weight/bias shapes disagree");
    }
    if (i > 0 && layers_[i - 1].weight.rows() != l.weight.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "consecutive layer widths do not chain");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw Error(ErrorCode::Numeric, "non-finite model parameter");
    }
  }
}

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> w{input_dim()};
  for (const auto& l : layers_) {
    w.push_back(static_cast<std::size_t>(l.weight.rows()));
  }
  return w;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) {
    return out;
  }
  const double m = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : out) {
    v /= sum;
  }
  return out;
}

ForwardCache forward_batch(const MlpModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    std::ostringstream msg;
    msg << "input dimension " << x.cols() << " does not match model input " << model.input_dim();
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  ForwardCache cache;
  const auto& layers = model.layers();
  cache.inputs.reserve(layers.size());
  cache.preacts.reserve(layers.size());
  Matrix a = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Matrix z = a * layers[i].weight.transpose();
    z.rowwise() += layers[i].bias.transpose();
    cache.inputs.push_back(std::move(a));
    if (i + 1 < layers.size()) {
      a = relu(z);
    }
    cache.preacts.push_back(std::move(z));
  }
  cache.probs = cache.preacts.back();
  softmax_rows(cache.probs);
  return cache;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    row(0, static_cast<Eigen::Index>(i)) = x[i];
  }
  const ForwardCache cache = forward_batch(model, row);
  return {cache.probs.data(), cache.probs.data() + cache.probs.size()};
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const auto& l : model.layers()) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

double Gradients::norm() const {
  double sq = 0.0;
  for (const auto& l : layers) {
    sq += l.weight.squaredNorm() + l.bias.squaredNorm();
  }
  return std::sqrt(sq);
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

bool Gradients::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& grad_p) {
  const auto& layers = model.layers();
  if (grad_p.rows() != cache.probs.rows() || grad_p.cols() != cache.probs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "grad_p shape does not match forward output");
  }
  // Softmax Jacobian: dz_k = p_k (g_k - sum_j p_j g_j).
  const Eigen::VectorXd dot = (cache.probs.array() * grad_p.array()).rowwise().sum();
  Matrix delta = cache.probs.array() * (grad_p.colwise() - dot).array();

  Gradients grads;
  grads.layers.resize(layers.size());
  for (std::size_t i = layers.size(); i-- > 0;) {
    grads.layers[i].weight = delta.transpose() * cache.inputs[i];
    grads.layers[i].bias = delta.colwise().sum().transpose();
    if (i > 0) {
      Matrix upstream = delta * layers[i].weight;
      const Matrix& z = cache.preacts[i - 1];
      delta = (z.array() > 0.0).select(upstream, 0.0);
    }
  }
  return grads;
}

Gradients backward(const MlpModel& model, std::span<const double> x, std::span<const double> grad_p) {
  if (grad_p.size() != model.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "grad_p length does not match class count");
  }
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    row(0, static_cast<Eigen::Index>(i)) = x[i];
  }
  const ForwardCache cache = forward_batch(model, row);
  Matrix g(1, static_cast<Eigen::Index>(grad_p.size()));
  for (std::size_t k = 0; k < grad_p.size(); ++k) {
    g(0, static_cast<Eigen::Index>(k)) = grad_p[k];
  }
  return backward(model, cache, g);
}

void validate(const OptimizerConfig& config) {
  if (!(config.lr0 > 0.0)) throw Error(ErrorCode::Parameter, "optimizer lr0 must be positive");
  if (!(config.clip_norm > 0.0)) throw Error(ErrorCode::Parameter, "clip_norm must be positive");
  if (!(config.weight_decay >= 0.0)) throw Error(ErrorCode::Parameter, "weight_decay must be >= 0");
  if (!(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0) ||
      !(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0) || !(config.adam_eps > 0.0)) {
    throw Error(ErrorCode::Parameter, "invalid Adam moment parameters");
  }
  if (config.total_epochs == 0) throw Error(ErrorCode::Parameter, "total_epochs must be >= 1");
}

double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0 || epoch > total_epochs) {
    std::ostringstream msg;
    msg << "cosine_lr: epoch " << epoch << " outside [0, " << total_epochs << "]";
    throw Error(ErrorCode::Parameter, msg.str());
  }
  if (epoch == total_epochs) {
    return 0.0;
  }
  const double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  AdamState s;
  s.m = Gradients::zeros_like(model).layers;
  s.v = s.m;
  return s;
}

StepInfo clip_and_step(MlpModel& model, Gradients& grads, const OptimizerConfig& config, double lr,
                       AdamState& state) {
  auto& layers = model.layers();
  if (grads.layers.size() != layers.size() || state.m.size() != layers.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient/optimizer state does not match model");
  }
  if (!grads.all_finite()) {
    throw Error(ErrorCode::Numeric, "non-finite parameter gradient");
  }
  StepInfo info;
  info.grad_norm = grads.norm();
  if (info.grad_norm > config.clip_norm) {
    grads.scale(config.clip_norm / info.grad_norm);
    info.clipped = true;
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.adam_beta1, t);
  const double c2 = 1.0 - std::pow(config.adam_beta2, t);
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v, double decay) {
    auto g = (grad.array() + decay * param.array()).eval();
    m.array() = b1 * m.array() + (1.0 - b1) * g;
    v.array() = b2 * v.array() + (1.0 - b2) * g.square();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.adam_eps);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, grads.layers[i].weight, state.m[i].weight, state.v[i].weight,
           config.weight_decay);
    update(layers[i].bias, grads.layers[i].bias, state.m[i].bias, state.v[i].bias, 0.0);
  }
  return info;
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) {
      best = k;
    }
  }
  return best;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  }
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, kCheckpointVersion);
  const auto widths = model.widths();
  write_pod(out, static_cast<std::uint32_t>(widths.size()));
  for (std::size_t w : widths) {
    write_pod(out, static_cast<std::uint64_t>(w));
  }
  for (const auto& l : model.layers()) {
    out.write(reinterpret_cast<const char*>(l.weight.data()),
              static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l.bias.data()),
              static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
  }
  if (!out) {
    throw Error(ErrorCode::Io, "failed writing " + path.string());
  }
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  }
  char magic[sizeof(kCheckpointMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::Format, path.string() + " is not a model checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = read_pod<std::uint32_t>(in, path);
  if (count < 2 || count > 1024) {
    throw Error(ErrorCode::Format, "implausible layer count in " + path.string());
  }
  std::vector<std::size_t> widths;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto w = read_pod<std::uint64_t>(in, path);
    if (w == 0 || w > (1u << 24)) {
      throw Error(ErrorCode::Format, "implausible layer width in " + path.string());
    }
    widths.push_back(static_cast<std::size_t>(w));
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l{Matrix(static_cast<Eigen::Index>(widths[i + 1]), static_cast<Eigen::Index>(widths[i])),
                 Vector(static_cast<Eigen::Index>(widths[i + 1]))};
    in.read(reinterpret_cast<char*>(l.weight.data()),
            static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(l.bias.data()),
            static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
    if (!in) {
      throw Error(ErrorCode::Format, "truncated checkpoint " + path.string());
    }
    layers.push_back(std::move(l));
  }
  return MlpModel(std::move(layers));
}

} // namespace fcl::net
