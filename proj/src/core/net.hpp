#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fcl::net {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Fully connected ReLU network with a softmax head. widths = {d, h1, ..., K}.
class MlpModel {
public:
  MlpModel(const std::vector<std::size_t>& widths, std::uint64_t seed);
  explicit MlpModel(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weight.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(layers_.back().weight.rows()); }
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

private:
  void check_chain() const;
  std::vector<DenseLayer> layers_;
};

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each layer, batch x in
  std::vector<Matrix> preacts;      // pre-activation of each layer, batch x out
  Matrix probs;                     // batch x K
};

/// Single sample forward pass; returns the class distribution.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

/// Batch forward pass over rows of x (batch x d).
ForwardCache forward_batch(const MlpModel& model, const Matrix& x);

struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const MlpModel& model);
  double norm() const;
  void scale(double factor);
  bool all_finite() const;
};

/// Backpropagates d(loss)/d(p) through the softmax Jacobian and the dense
/// layers. grad_p is batch x K; parameter gradients are summed over the batch.
Gradients backward(const MlpModel& model, const ForwardCache& cache, const Matrix& grad_p);

/// Single-sample convenience wrapper.
Gradients backward(const MlpModel& model, std::span<const double> x, std::span<const double> grad_p);

struct OptimizerConfig {
  double lr0 = 1e-3;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t total_epochs = 40;
  double clip_norm = 10.0;
};

void validate(const OptimizerConfig& config);

/// lr0 * (1 + cos(pi * epoch / total_epochs)) / 2. Throws Error(Parameter) when epoch > total.
double cosine_lr(double lr0, std::size_t epoch, std::size_t total_epochs);

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::size_t step = 0;

  static AdamState zeros_like(const MlpModel& model);
};

struct StepInfo {
  double grad_norm = 0.0;  // before clipping
  bool clipped = false;
};

/// Clips grads to config.clip_norm (global L2), then applies one Adam step with
/// L2 weight decay added to the weight gradients (biases are not decayed).
/// grads is modified in place to hold the clipped values.
StepInfo clip_and_step(MlpModel& model, Gradients& grads, const OptimizerConfig& config, double lr,
                       AdamState& state);

/// Index of the largest probability; ties go to the lowest index.
std::size_t argmax(std::span<const double> probs);

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

} // namespace fcl::net
