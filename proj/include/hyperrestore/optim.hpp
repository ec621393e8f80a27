#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperrestore/parameter.hpp"

namespace hyperrestore {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are created lazily to match the
/// parameter list given on the first step; later steps must pass the same layout.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update: p -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<const ParameterRef> params, const std::vector<std::vector<float>>& grads);

  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const AdamConfig& config() const { return config_; }
  std::size_t steps_taken() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Rescales all gradients in place so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<std::vector<float>>& grads, double max_norm);

}  // namespace hyperrestore
