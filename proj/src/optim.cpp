#include "hyperrestore/optim.hpp"

#include <cmath>

namespace hyperrestore {

void Adam::step(std::span<const ParameterRef> params, const std::vector<std::vector<float>>& grads) {
  if (params.size() != grads.size()) {
    throw ContractViolation("Adam: " + std::to_string(params.size()) + " parameters but " +
                            std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ContractViolation("Adam: parameter layout changed between steps");

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values;
    const auto& g = grads[i];
    if (values.size() != g.size() || m_[i].size() != g.size()) {
      throw ContractViolation("Adam: gradient for '" + params[i].name + "' has the wrong size");
    }
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * static_cast<double>(g[j]) * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] = static_cast<float>(values[j] - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

double clip_global_norm(std::vector<std::vector<float>>& grads, double max_norm) {
  double total = 0.0;
  for (const auto& g : grads)
    for (float v : g) total += static_cast<double>(v) * v;
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& g : grads)
      for (auto& v : g) v = static_cast<float>(v * factor);
  }
  return norm;
}

}  // namespace hyperrestore
