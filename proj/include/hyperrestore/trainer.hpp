#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperrestore/datasets.hpp"
#include "hyperrestore/estimator.hpp"
#include "hyperrestore/model.hpp"
#include "hyperrestore/optim.hpp"

namespace hyperrestore {

/// Non-finite loss or similar unrecoverable training failure.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  TaskKind task = TaskKind::noise;
  std::vector<double> levels{5, 25, 45, 65, 90};
  std::optional<LevelRange> range;  // defaults to [min(levels), max(levels)]
  ArchConfig arch;
  std::size_t batch_size = 4;
  std::size_t patch_size = 32;
  std::size_t steps = 2000;
  AdamConfig adam;
  std::size_t lr_halve_every = 0;  // 0 disables the decay
  double grad_clip = 1.0;          // global L2 norm; <= 0 disables
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t validate_every = 0;  // 0: validate only at the end
  std::size_t log_every = 50;
  bool horizontal_flips = true;
  std::optional<EstimatorTrainConfig> estimator;

  /// k >= 2 distinct finite levels, positive batch/patch sizes, valid arch.
  void validate() const;
  /// Copy with levels sorted ascending; training always runs in this order.
  TrainConfig normalized() const;
  LevelRange level_range() const;
  double learning_rate_at(std::size_t step) const;

  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

TrainConfig load_train_config(const std::filesystem::path& path);

/// One clean patch assigned to a level (index into the level list) with its noise seed.
struct TrainSample {
  Tensor clean;
  std::size_t level_index = 0;
  std::uint64_t seed = 0;
};

struct TrainState {
  HyperRestoreModel model;
  Adam optimizer;
  std::size_t step = 0;
  std::vector<std::vector<double>> loss_history;  // [level][step]
};

struct StepOptions {
  double grad_clip = 1.0;
  std::size_t workers = 1;
  double learning_rate = 1e-3;
};

struct LevelPass {
  double loss = 0.0;
  std::vector<std::vector<float>> grads;  // aligned with HyperRestoreModel::parameters()
};

/// Forward/backward of one generated network: mean L1 over the samples of
/// one level, degraded at that level. Independent of any other level.
LevelPass level_pass(const HyperRestoreModel& model, double level, std::span<const TrainSample> samples);

struct StepResult {
  std::vector<double> level_losses;  // aligned with `levels`
  double total_loss = 0.0;
  double grad_norm = 0.0;
  std::vector<std::vector<float>> grads;  // summed (pre-clipping) gradient
};

/// Sum of per-level L1 losses with unit weights, one Adam update on the
/// hypernetwork and shared weights. Per-level passes may run on `workers`
/// threads; their gradients are summed in level order, so results do not
/// depend on the worker count.
StepResult train_step(TrainState& state, std::span<const double> levels, std::span<const TrainSample> batch,
                      const StepOptions& options);

/// Full run. Emits JSON lines (train / validation records) to `progress`.
/// `validation` images are degraded with fixed seeds for the PSNR reports.
HyperRestoreModel train(const TrainConfig& config, PatchSource& patches,
                        const std::vector<ImageRecord>& validation = {}, std::ostream* progress = nullptr);

struct LevelValidation {
  double level = 0.0;
  double restored_psnr_db = 0.0;
  double input_psnr_db = 0.0;
};

/// Mean PSNR of restored vs. degraded inputs per level; noise seeds derived from `seed`.
std::vector<LevelValidation> validate_levels(const HyperRestoreModel& model, std::span<const double> levels,
                                             const std::vector<ImageRecord>& images, std::uint64_t seed);

}  // namespace hyperrestore
