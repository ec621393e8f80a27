#include "hyperrestore/hypernet.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hyperrestore/ops.hpp"

namespace hyperrestore {

HyperNetwork::HyperNetwork(std::vector<MetaBlock> blocks) : blocks_(std::move(blocks)) {
  std::set<std::size_t> slots;
  for (const auto& block : blocks_) {
    const auto n = block.kernel_shape.numel();
    if (block.w.size() != n || block.b.size() != n) {
      throw ContractViolation("meta block " + std::to_string(block.target_slot) + ": w/b lengths " +
                              std::to_string(block.w.size()) + "/" + std::to_string(block.b.size()) +
                              " do not match kernel " + shape_to_string(block.kernel_shape.as_shape()));
    }
    if (!slots.insert(block.target_slot).second) {
      throw ContractViolation("duplicate meta block target slot " + std::to_string(block.target_slot));
    }
  }
  std::sort(blocks_.begin(), blocks_.end(),
            [](const MetaBlock& a, const MetaBlock& b) { return a.target_slot < b.target_slot; });
}

HyperNetwork HyperNetwork::initialize(std::size_t num_kernels, KernelShape shape, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.in_channels * shape.size * shape.size));
  std::uniform_real_distribution<double> slope(-0.1 * bound, 0.1 * bound);
  std::uniform_real_distribution<double> offset(-bound, bound);
  std::vector<MetaBlock> blocks;
  blocks.reserve(num_kernels);
  for (std::size_t j = 0; j < num_kernels; ++j) {
    MetaBlock block;
    block.target_slot = j;
    block.kernel_shape = shape;
    block.w.resize(shape.numel());
    block.b.resize(shape.numel());
    for (auto& v : block.w) v = static_cast<float>(slope(rng));
    for (auto& v : block.b) v = static_cast<float>(offset(rng));
    blocks.push_back(std::move(block));
  }
  return HyperNetwork(std::move(blocks));
}

Tensor generate_kernel(const MetaBlock& block, double c) {
  const auto shape = block.kernel_shape.as_shape();
  return affine_combine(Tensor::from(shape, block.w), Tensor::from(shape, block.b), c);
}

Tensor generate_kernel(const Tensor& w, const Tensor& b, double c) {
  return affine_combine(w, b, c);
}

std::vector<Tensor> generate_network_weights(const HyperNetwork& hnet, double c) {
  std::vector<Tensor> kernels;
  kernels.reserve(hnet.size());
  for (const auto& block : hnet.blocks()) kernels.push_back(generate_kernel(block, c));
  return kernels;
}

std::size_t count_parameters(const HyperNetwork& hnet) {
  std::size_t total = 0;
  for (const auto& block : hnet.blocks()) total += 2 * block.kernel_shape.numel();
  return total;
}

}  // namespace hyperrestore
