#include "hyperrestore/model.hpp"

#include <zlib.h>

#include "hyperrestore/ops.hpp"

namespace hyperrestore {

HyperRestoreModel HyperRestoreModel::initialize(const ArchConfig& arch, TaskKind task, const LevelRange& range,
                                                std::uint64_t seed) {
  arch.validate();
  range.validate();
  std::mt19937_64 rng(seed);
  HyperRestoreModel model;
  model.arch = arch;
  model.task = task;
  model.range = range;
  model.hypernet = HyperNetwork::initialize(arch.num_generated_kernels(), arch.resblock_kernel_shape(), rng);
  model.shared = SharedWeights::initialize(arch, rng);
  model.metadata.seed = seed;
  return model;
}

std::vector<ParameterRef> HyperRestoreModel::parameters() {
  std::vector<ParameterRef> out;
  for (auto& block : hypernet.blocks()) {
    const auto prefix = "meta." + std::to_string(block.target_slot);
    out.push_back({prefix + ".w", block.kernel_shape.as_shape(), block.w});
    out.push_back({prefix + ".b", block.kernel_shape.as_shape(), block.b});
  }
  auto conv = [&out](const std::string& prefix, ConvParams& p) {
    out.push_back({prefix + ".weight", p.weight.shape, p.weight.values});
    out.push_back({prefix + ".bias", p.bias.shape, p.bias.values});
  };
  conv("shared.head", shared.head);
  conv("shared.tail_expand", shared.tail_expand);
  conv("shared.tail_out", shared.tail_out);
  return out;
}

std::vector<ParameterView> HyperRestoreModel::parameters() const {
  std::vector<ParameterView> out;
  for (auto& ref : const_cast<HyperRestoreModel*>(this)->parameters()) {
    out.push_back({ref.name, ref.shape, ref.values});
  }
  return out;
}

std::uint32_t model_checksum(const HyperRestoreModel& model) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& view : model.parameters()) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(view.values.data()),
                static_cast<uInt>(view.values.size() * sizeof(float)));
  }
  return static_cast<std::uint32_t>(crc);
}

BoundModel::BoundModel(const HyperRestoreModel& model, bool trainable) : arch_(model.arch) {
  for (const auto& view : model.parameters()) {
    std::vector<float> values(view.values.begin(), view.values.end());
    leaves_.push_back(trainable ? Tensor::leaf(view.shape, std::move(values))
                                : Tensor::from(view.shape, std::move(values)));
  }
  const std::size_t meta = 2 * model.hypernet.size();
  for (std::size_t j = 0; j < model.hypernet.size(); ++j) {
    meta_w_.push_back(leaves_[2 * j]);
    meta_b_.push_back(leaves_[2 * j + 1]);
  }
  shared_ = {{leaves_[meta], leaves_[meta + 1]},
             {leaves_[meta + 2], leaves_[meta + 3]},
             {leaves_[meta + 4], leaves_[meta + 5]}};
}

std::vector<Tensor> BoundModel::kernels(double c) const {
  std::vector<Tensor> out;
  out.reserve(meta_w_.size());
  for (std::size_t j = 0; j < meta_w_.size(); ++j) out.push_back(generate_kernel(meta_w_[j], meta_b_[j], c));
  return out;
}

Tensor BoundModel::forward(const Tensor& image, double c) const {
  const auto generated = kernels(c);
  return hyperrestore::forward(image, generated, shared_, arch_);
}

std::vector<std::vector<float>> BoundModel::gradients() const {
  std::vector<std::vector<float>> out;
  out.reserve(leaves_.size());
  for (const auto& leaf : leaves_) out.push_back(leaf.grad());
  return out;
}

namespace {

Tensor pad_to_even(const Tensor& image) {
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t ph = h + h % 2, pw = w + w % 2;
  if (ph == h && pw == w) return image;
  Tensor out = Tensor::zeros({c, ph, pw});
  auto src = image.data();
  auto dst = out.mutable_data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ph; ++y)
      for (std::size_t x = 0; x < pw; ++x) {
        dst[(ch * ph + y) * pw + x] = src[(ch * h + std::min(y, h - 1)) * w + std::min(x, w - 1)];
      }
  return out;
}

}  // namespace

GeneratedNetwork generate_network(const HyperRestoreModel& model, double c) {
  GeneratedNetwork net;
  net.c = c;
  net.arch = model.arch;
  net.kernels = generate_network_weights(model.hypernet, c);
  net.shared = SharedTensors::bind(model.shared, false);
  return net;
}

Tensor GeneratedNetwork::run(const Tensor& degraded) const {
  if (degraded.rank() != 3 || degraded.dim(0) != 3) {
    throw ContractViolation("restore expects a 3xHxW image, got " + shape_to_string(degraded.shape()));
  }
  Tensor out = forward(pad_to_even(degraded), kernels, shared, arch);
  if (out.dim(1) != degraded.dim(1) || out.dim(2) != degraded.dim(2)) {
    out = crop(out, 0, 0, degraded.dim(1), degraded.dim(2));
  }
  return clamp01(out);
}

Tensor restore(const HyperRestoreModel& model, const Tensor& degraded, double c) {
  return generate_network(model, c).run(degraded);
}

Tensor restore_at_level(const HyperRestoreModel& model, const Tensor& degraded, double level) {
  return restore(model, degraded, model.conditioning(level));
}

}  // namespace hyperrestore
