#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "hyperrestore/datasets.hpp"
#include "hyperrestore/degrade.hpp"
#include "hyperrestore/parameter.hpp"

namespace hyperrestore {

struct LinearParams {
  Parameter weight;  // out x in
  Parameter bias;    // out

  static LinearParams initialize(std::size_t out, std::size_t in, std::mt19937_64& rng);
  bool operator==(const LinearParams&) const = default;
};

/// Blind level regressor: five 3x3 convolutions (stride 2 from the third on)
/// and three fully connected layers, reading a fixed 64x64 crop.
///
/// The last layer's output o is mapped to raw units as level_offset + level_scale * o,
/// so a zeroed final weight yields a constant estimate.
struct EstimatorNet {
  static constexpr std::size_t kInputSize = 64;

  TaskKind task = TaskKind::noise;
  std::array<ConvParams, 5> convs;
  std::array<LinearParams, 3> fcs;
  double level_offset = 0.0;
  double level_scale = 1.0;

  /// Output mapping centred on `range` (offset = midpoint, scale = half width).
  static EstimatorNet initialize(TaskKind task, const LevelRange& range, std::mt19937_64& rng);

  std::vector<ParameterRef> parameters();
  std::vector<ParameterView> parameters() const;

  bool operator==(const EstimatorNet&) const = default;
};

/// Differentiable forward over bound leaves; returns a 1-element tensor in raw units.
Tensor estimator_forward(const EstimatorNet& net, std::span<const Tensor> leaves, const Tensor& crop64);

/// Raw-level estimate from the central 64x64 crop. Smaller images are a contract violation.
double estimate_level(const EstimatorNet& net, const Tensor& image);

struct LabeledImage {
  Tensor image;
  double level = 0.0;
};

/// 100 * (1 - mean |estimate - true| / (max - min)).
double estimator_accuracy(const EstimatorNet& net, const std::vector<LabeledImage>& eval_set,
                          const LevelRange& range);

/// Same metric from precomputed estimates.
double estimator_accuracy(const std::vector<double>& estimates, const std::vector<double>& truth,
                          const LevelRange& range);

struct EstimatorTrainConfig {
  TaskKind task = TaskKind::noise;
  std::vector<double> levels{10, 30, 50};
  std::size_t steps = 1500;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::size_t lr_halve_every = 0;  // 0 keeps the rate constant
  std::uint64_t seed = 7;
};

/// L1 regression on the raw level. Draws 64x64 crops from `patches` (its patch
/// size must be 64) and a uniformly chosen training level per sample.
EstimatorNet train_estimator(const EstimatorTrainConfig& config, PatchSource& patches,
                             std::ostream* progress = nullptr);

}  // namespace hyperrestore
