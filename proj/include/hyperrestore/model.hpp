#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperrestore/degrade.hpp"
#include "hyperrestore/estimator.hpp"
#include "hyperrestore/hypernet.hpp"
#include "hyperrestore/restoration_net.hpp"

namespace hyperrestore {

struct ModelMetadata {
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::vector<double> trained_levels;

  bool operator==(const ModelMetadata&) const = default;
};

/// All learnable state: meta blocks, shared head/tail, optional blind estimator.
struct HyperRestoreModel {
  ArchConfig arch;
  TaskKind task = TaskKind::noise;
  LevelRange range;
  HyperNetwork hypernet;
  SharedWeights shared;
  std::optional<EstimatorNet> estimator;
  ModelMetadata metadata;

  static HyperRestoreModel initialize(const ArchConfig& arch, TaskKind task, const LevelRange& range,
                                      std::uint64_t seed);

  /// Restoration parameters in canonical order: meta.{j}.w, meta.{j}.b for
  /// every slot, then shared.head.*, shared.tail_expand.*, shared.tail_out.*.
  std::vector<ParameterRef> parameters();
  std::vector<ParameterView> parameters() const;

  ParameterBreakdown parameter_counts() const { return count_total_parameters(shared, hypernet); }
  double conditioning(double level) const { return normalize_level(level, range); }

  bool operator==(const HyperRestoreModel&) const = default;
};

/// CRC-32 over the restoration parameter payloads (estimator excluded).
std::uint32_t model_checksum(const HyperRestoreModel& model);

/// Tape-side mirror of a model's restoration parameters for one forward/backward pass.
class BoundModel {
 public:
  BoundModel(const HyperRestoreModel& model, bool trainable);

  std::vector<Tensor> kernels(double c) const;
  /// Unclamped network output for an even-sized 3xHxW input.
  Tensor forward(const Tensor& image, double c) const;

  const std::vector<Tensor>& leaves() const { return leaves_; }
  /// Gradients aligned with HyperRestoreModel::parameters().
  std::vector<std::vector<float>> gradients() const;
  const SharedTensors& shared() const { return shared_; }

 private:
  ArchConfig arch_;
  std::vector<Tensor> leaves_;
  std::vector<Tensor> meta_w_;
  std::vector<Tensor> meta_b_;
  SharedTensors shared_;
};

/// One concrete main network: kernels generated for a fixed c plus the shared layers.
struct GeneratedNetwork {
  double c = 0.0;
  ArchConfig arch;
  std::vector<Tensor> kernels;
  SharedTensors shared;

  /// Edge-pads odd sizes to even, runs the network, crops back, clamps to [0, 1].
  Tensor run(const Tensor& degraded) const;
};

GeneratedNetwork generate_network(const HyperRestoreModel& model, double c);

/// Inference: generates the network for c, edge-pads odd sizes to even,
/// runs the forward pass, crops back and clamps to [0, 1].
Tensor restore(const HyperRestoreModel& model, const Tensor& degraded, double c);
Tensor restore_at_level(const HyperRestoreModel& model, const Tensor& degraded, double level);

}  // namespace hyperrestore
