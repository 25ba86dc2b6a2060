#include "mu_adapter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "error.hpp"

namespace fcl::mu {

MuOptimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return MuOptimizer::SGD;
  if (name == "adam") return MuOptimizer::Adam;
  throw Error(ErrorCode::Parameter, "unknown mu optimizer '" + std::string(name) + "'");
}

std::string_view to_string(MuOptimizer opt) {
  return opt == MuOptimizer::SGD ? "sgd" : "adam";
}

MuState::MuState(const MuConfig& config) : config_(config), mu_(config.mu0) {
  if (!(config.mu0 >= 0.0 && config.mu0 <= 1.0)) {
    std::ostringstream msg;
    msg << "initial mu = " << config.mu0 << " outside [0, 1]";
    throw Error(ErrorCode::Domain, msg.str());
  }
  if (!(config.lr > 0.0) || !std::isfinite(config.lr)) {
    throw Error(ErrorCode::Parameter, "mu learning rate must be positive");
  }
}

void MuState::accumulate(double batch_mean_grad_mu) {
  if (!std::isfinite(batch_mean_grad_mu)) {
    throw Error(ErrorCode::Numeric, "non-finite mu gradient");
  }
  acc_grad_ += batch_mean_grad_mu;
  ++batches_seen_;
}

void MuState::epoch_update() {
  if (batches_seen_ == 0) {
    throw Error(ErrorCode::State, "epoch_update called before any batch was accumulated");
  }
  if (!frozen()) {
    const double grad = acc_grad_ / static_cast<double>(batches_seen_);
    double step = 0.0;
    if (config_.optimizer == MuOptimizer::SGD) {
      step = config_.lr * grad;
    } else {
      ++steps_;
      m_ = config_.adam_beta1 * m_ + (1.0 - config_.adam_beta1) * grad;
      v_ = config_.adam_beta2 * v_ + (1.0 - config_.adam_beta2) * grad * grad;
      const double t = static_cast<double>(steps_);
      const double m_hat = m_ / (1.0 - std::pow(config_.adam_beta1, t));
      const double v_hat = v_ / (1.0 - std::pow(config_.adam_beta2, t));
      step = config_.lr * m_hat / (std::sqrt(v_hat) + config_.adam_eps);
    }
    mu_ = std::clamp(mu_ - step, 0.0, 1.0);
  }
  acc_grad_ = 0.0;
  batches_seen_ = 0;
  ++epoch_;
}

} // namespace fcl::mu
