#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

/// Plain learnable array owned by a model; bound to tape leaves per step.
struct Parameter {
  Shape shape;
  std::vector<float> values;

  static Parameter zeros(Shape shape);
  /// Uniform in [-bound, bound].
  static Parameter uniform(Shape shape, double bound, std::mt19937_64& rng);

  std::size_t numel() const { return values.size(); }
  Tensor to_leaf() const { return Tensor::leaf(shape, values); }
  Tensor to_tensor() const { return Tensor::from(shape, values); }

  bool operator==(const Parameter&) const = default;
};

/// Convolution weight (Cout x Cin x K x K) plus bias (Cout).
struct ConvParams {
  Parameter weight;
  Parameter bias;

  /// Standard fan-in uniform initialization, bound 1/sqrt(Cin*K*K).
  static ConvParams initialize(std::size_t cout, std::size_t cin, std::size_t k, std::mt19937_64& rng);
  std::size_t count() const { return weight.numel() + bias.numel(); }

  bool operator==(const ConvParams&) const = default;
};

/// Named mutable view used by optimizers and serialization.
struct ParameterRef {
  std::string name;
  Shape shape;
  std::span<float> values;
};

struct ParameterView {
  std::string name;
  Shape shape;
  std::span<const float> values;
};

}  // namespace hyperrestore
