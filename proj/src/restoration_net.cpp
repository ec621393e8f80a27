#include "hyperrestore/restoration_net.hpp"

#include "hyperrestore/ops.hpp"

namespace hyperrestore {

void ArchConfig::validate() const {
  if (channels == 0) throw ContractViolation("architecture needs at least one channel");
  if (num_resblocks == 0) throw ContractViolation("architecture needs at least one residual block");
  if (kernel_size != 3) throw ContractViolation("only 3x3 kernels are supported");
  if (upscale_internal != 2) throw ContractViolation("only a stride-2 head with pixelshuffle(2) is supported");
}

SharedWeights SharedWeights::initialize(const ArchConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const auto c = cfg.channels;
  const auto k = cfg.kernel_size;
  const auto r2 = cfg.upscale_internal * cfg.upscale_internal;
  SharedWeights s;
  s.head = ConvParams::initialize(c, 3, k, rng);
  s.tail_expand = ConvParams::initialize(c * r2, c, k, rng);
  s.tail_out = ConvParams::initialize(3, c, k, rng);
  return s;
}

SharedTensors SharedTensors::bind(const SharedWeights& shared, bool trainable) {
  auto conv = [trainable](const ConvParams& p) {
    return trainable ? ConvTensors{p.weight.to_leaf(), p.bias.to_leaf()}
                     : ConvTensors{p.weight.to_tensor(), p.bias.to_tensor()};
  };
  return {conv(shared.head), conv(shared.tail_expand), conv(shared.tail_out)};
}

Tensor forward(const Tensor& image, std::span<const Tensor> generated_kernels,
               const SharedTensors& shared, const ArchConfig& cfg) {
  cfg.validate();
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ContractViolation("restoration input must be 3xHxW, got " + shape_to_string(image.shape()));
  }
  if (image.dim(1) % 2 != 0 || image.dim(2) % 2 != 0) {
    throw ContractViolation("restoration input needs even height and width, got " +
                            shape_to_string(image.shape()));
  }
  if (generated_kernels.size() != cfg.num_generated_kernels()) {
    throw ContractViolation("expected " + std::to_string(cfg.num_generated_kernels()) +
                            " generated kernels, got " + std::to_string(generated_kernels.size()));
  }
  const std::size_t pad = cfg.kernel_size / 2;

  const Tensor f0 = relu(conv2d(image, shared.head.weight, shared.head.bias, 2, pad));
  Tensor features = f0;
  for (std::size_t b = 0; b < cfg.num_resblocks; ++b) {
    Tensor t = conv2d(features, generated_kernels[2 * b], std::nullopt, 1, pad);
    t = conv2d(relu(t), generated_kernels[2 * b + 1], std::nullopt, 1, pad);
    features = add(features, t);
  }
  features = add(features, f0);

  Tensor up = conv2d(features, shared.tail_expand.weight, shared.tail_expand.bias, 1, pad);
  up = pixelshuffle(up, cfg.upscale_internal);
  return conv2d(up, shared.tail_out.weight, shared.tail_out.bias, 1, pad);
}

ParameterBreakdown count_total_parameters(const SharedWeights& shared, const HyperNetwork& hnet) {
  ParameterBreakdown out;
  out.head = shared.head.count();
  out.resblock_meta = count_parameters(hnet);
  out.tail = shared.tail_expand.count() + shared.tail_out.count();
  out.total = out.head + out.resblock_meta + out.tail;
  return out;
}

ParameterBreakdown count_total_parameters(const ArchConfig& cfg) {
  cfg.validate();
  const auto c = cfg.channels;
  const auto kk = cfg.kernel_size * cfg.kernel_size;
  const auto r2 = cfg.upscale_internal * cfg.upscale_internal;
  ParameterBreakdown out;
  out.head = 3 * c * kk + c;
  out.resblock_meta = 2 * cfg.num_generated_kernels() * cfg.resblock_kernel_shape().numel();
  out.tail = (c * c * r2 * kk + c * r2) + (c * 3 * kk + 3);
  out.total = out.head + out.resblock_meta + out.tail;
  return out;
}

}  // namespace hyperrestore
