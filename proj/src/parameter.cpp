#include "hyperrestore/parameter.hpp"

#include <cmath>

namespace hyperrestore {

Parameter Parameter::zeros(Shape shape) {
  const auto n = shape_numel(shape);
  return Parameter{std::move(shape), std::vector<float>(n, 0.0f)};
}

Parameter Parameter::uniform(Shape shape, double bound, std::mt19937_64& rng) {
  Parameter p = zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.values) v = static_cast<float>(dist(rng));
  return p;
}

ConvParams ConvParams::initialize(std::size_t cout, std::size_t cin, std::size_t k,
                                  std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
  ConvParams p;
  p.weight = Parameter::uniform({cout, cin, k, k}, bound, rng);
  p.bias = Parameter::uniform({cout}, bound, rng);
  return p;
}

}  // namespace hyperrestore
