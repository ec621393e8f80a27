#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

struct KernelShape {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t size = 0;

  Shape as_shape() const { return {out_channels, in_channels, size, size}; }
  std::size_t numel() const { return out_channels * in_channels * size * size; }
  bool operator==(const KernelShape&) const = default;
};

/// Slope/offset pair generating one main-network kernel: k = c * w + b.
struct MetaBlock {
  std::vector<float> w;
  std::vector<float> b;
  std::size_t target_slot = 0;
  KernelShape kernel_shape;

  bool operator==(const MetaBlock&) const = default;
};

/// Ordered set of meta blocks, one per residual-block kernel of the main network.
class HyperNetwork {
 public:
  HyperNetwork() = default;
  /// Validates vector lengths and slot uniqueness, then sorts by target slot.
  explicit HyperNetwork(std::vector<MetaBlock> blocks);

  /// Slopes ~ U(-0.1/sqrt(fan_in), 0.1/sqrt(fan_in)), offsets ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static HyperNetwork initialize(std::size_t num_kernels, KernelShape shape, std::mt19937_64& rng);

  const std::vector<MetaBlock>& blocks() const { return blocks_; }
  std::vector<MetaBlock>& blocks() { return blocks_; }
  std::size_t size() const { return blocks_.size(); }

  bool operator==(const HyperNetwork&) const = default;

 private:
  std::vector<MetaBlock> blocks_;
};

/// Non-trainable kernel for conditioning scalar c. Throws ContractViolation on non-finite c.
Tensor generate_kernel(const MetaBlock& block, double c);

/// Differentiable variant over leaf tensors already shaped like the kernel.
Tensor generate_kernel(const Tensor& w, const Tensor& b, double c);

/// One kernel per meta block, in target-slot order.
std::vector<Tensor> generate_network_weights(const HyperNetwork& hnet, double c);

/// 2 * Cout * Cin * K * K summed over blocks. Independent of how many levels are served.
std::size_t count_parameters(const HyperNetwork& hnet);

}  // namespace hyperrestore
