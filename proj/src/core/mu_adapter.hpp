#pragma once

#include <cstddef>
#include <string_view>

namespace fcl::mu {

enum class MuOptimizer { SGD, Adam };

MuOptimizer parse_optimizer(std::string_view name);
std::string_view to_string(MuOptimizer opt);

struct MuConfig {
  double mu0 = 0.5;
  double lr = 0.1;
  std::size_t freeze_epochs = 5;
  MuOptimizer optimizer = MuOptimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Learnable fractional order. Within an epoch, batch-mean d(loss)/d(mu) values
/// are summed; at epoch end the mean over batches drives one optimizer step,
/// projected back onto [0, 1]. The first freeze_epochs updates are skipped.
class MuState {
public:
  explicit MuState(const MuConfig& config);

  double mu() const noexcept { return mu_; }
  double acc_grad() const noexcept { return acc_grad_; }
  std::size_t batches_seen() const noexcept { return batches_seen_; }
  std::size_t epoch() const noexcept { return epoch_; }
  bool frozen() const noexcept { return epoch_ < config_.freeze_epochs; }
  const MuConfig& config() const noexcept { return config_; }

  // Adam moments and step count; zero in SGD mode.
  double first_moment() const noexcept { return m_; }
  double second_moment() const noexcept { return v_; }
  std::size_t steps() const noexcept { return steps_; }

  /// Adds one batch-mean gradient. Throws Error(Numeric) on non-finite input.
  void accumulate(double batch_mean_grad_mu);

  /// Applies the once-per-epoch update and resets the accumulator.
  /// Throws Error(State) when no batch was accumulated.
  void epoch_update();

private:
  MuConfig config_;
  double mu_;
  double acc_grad_ = 0.0;
  std::size_t batches_seen_ = 0;
  std::size_t epoch_ = 0;
  double m_ = 0.0;
  double v_ = 0.0;
  std::size_t steps_ = 0;
};

} // namespace fcl::mu
