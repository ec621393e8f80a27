#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "hyperrestore/hypernet.hpp"
#include "hyperrestore/parameter.hpp"
#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

struct ArchConfig {
  std::size_t channels = 8;
  std::size_t num_resblocks = 4;
  std::size_t kernel_size = 3;
  std::size_t upscale_internal = 2;

  /// Throws ContractViolation for zero channels/resblocks or unsupported kernel/upscale.
  void validate() const;
  std::size_t num_generated_kernels() const { return 2 * num_resblocks; }
  KernelShape resblock_kernel_shape() const { return {channels, channels, kernel_size}; }

  static ArchConfig desk() { return {}; }
  static ArchConfig full() { return {64, 16, 3, 2}; }

  bool operator==(const ArchConfig&) const = default;
};

/// Head and tail layers common to every generated network.
struct SharedWeights {
  ConvParams head;         // 3 -> C, stride 2
  ConvParams tail_expand;  // C -> 4C, feeds pixelshuffle(2)
  ConvParams tail_out;     // C -> 3

  static SharedWeights initialize(const ArchConfig& cfg, std::mt19937_64& rng);
  bool operator==(const SharedWeights&) const = default;
};

struct ConvTensors {
  Tensor weight;
  Tensor bias;
};

struct SharedTensors {
  ConvTensors head;
  ConvTensors tail_expand;
  ConvTensors tail_out;

  static SharedTensors bind(const SharedWeights& shared, bool trainable);
};

/// Main restoration network:
///   head conv (stride 2) + relu -> f0
///   num_resblocks x [conv, relu, conv, + identity]
///   + f0 (global skip over the residual blocks)
///   tail_expand conv -> pixelshuffle(2) -> tail_out conv
/// The output is not clamped. H and W must be even.
Tensor forward(const Tensor& image, std::span<const Tensor> generated_kernels,
               const SharedTensors& shared, const ArchConfig& cfg);

struct ParameterBreakdown {
  std::size_t head = 0;
  std::size_t resblock_meta = 0;
  std::size_t tail = 0;
  std::size_t total = 0;
};

ParameterBreakdown count_total_parameters(const SharedWeights& shared, const HyperNetwork& hnet);
/// Same accounting derived from the architecture alone.
ParameterBreakdown count_total_parameters(const ArchConfig& cfg);

}  // namespace hyperrestore
