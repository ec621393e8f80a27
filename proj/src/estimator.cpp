#include "hyperrestore/estimator.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hyperrestore/ops.hpp"
#include "hyperrestore/optim.hpp"
#include "hyperrestore/seeding.hpp"

namespace hyperrestore {

namespace {

struct ConvLayout {
  std::size_t in, out, stride;
};

constexpr std::array<ConvLayout, 5> kConvLayout = {{{3, 8, 1}, {8, 8, 1}, {8, 16, 2}, {16, 16, 2}, {16, 16, 2}}};
constexpr std::size_t kFeatureSide = EstimatorNet::kInputSize / 8;
constexpr std::size_t kFlat = 16 * kFeatureSide * kFeatureSide;
constexpr std::array<std::size_t, 4> kFcWidths = {kFlat, 32, 16, 1};

}  // namespace

LinearParams LinearParams::initialize(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return {Parameter::uniform({out, in}, bound, rng), Parameter::uniform({out}, bound, rng)};
}

EstimatorNet EstimatorNet::initialize(TaskKind task, const LevelRange& range, std::mt19937_64& rng) {
  range.validate();
  EstimatorNet net;
  net.task = task;
  for (std::size_t i = 0; i < kConvLayout.size(); ++i) {
    net.convs[i] = ConvParams::initialize(kConvLayout[i].out, kConvLayout[i].in, 3, rng);
  }
  for (std::size_t i = 0; i < net.fcs.size(); ++i) {
    net.fcs[i] = LinearParams::initialize(kFcWidths[i + 1], kFcWidths[i], rng);
  }
  net.level_offset = 0.5 * (range.min + range.max);
  net.level_scale = 0.5 * (range.max - range.min);
  return net;
}

std::vector<ParameterRef> EstimatorNet::parameters() {
  std::vector<ParameterRef> out;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto prefix = "estimator.conv" + std::to_string(i);
    out.push_back({prefix + ".weight", convs[i].weight.shape, convs[i].weight.values});
    out.push_back({prefix + ".bias", convs[i].bias.shape, convs[i].bias.values});
  }
  for (std::size_t i = 0; i < fcs.size(); ++i) {
    const auto prefix = "estimator.fc" + std::to_string(i);
    out.push_back({prefix + ".weight", fcs[i].weight.shape, fcs[i].weight.values});
    out.push_back({prefix + ".bias", fcs[i].bias.shape, fcs[i].bias.values});
  }
  return out;
}

std::vector<ParameterView> EstimatorNet::parameters() const {
  std::vector<ParameterView> out;
  for (auto& ref : const_cast<EstimatorNet*>(this)->parameters()) {
    out.push_back({ref.name, ref.shape, ref.values});
  }
  return out;
}

Tensor estimator_forward(const EstimatorNet& net, std::span<const Tensor> leaves, const Tensor& crop64) {
  if (leaves.size() != 2 * (net.convs.size() + net.fcs.size())) {
    throw ContractViolation("estimator_forward: wrong number of bound parameters");
  }
  const Shape expected{3, EstimatorNet::kInputSize, EstimatorNet::kInputSize};
  if (crop64.shape() != expected) {
    throw ContractViolation("estimator input must be " + shape_to_string(expected) + ", got " +
                            shape_to_string(crop64.shape()));
  }
  Tensor x = crop64;
  std::size_t p = 0;
  for (std::size_t i = 0; i < kConvLayout.size(); ++i, p += 2) {
    x = relu(conv2d(x, leaves[p], leaves[p + 1], kConvLayout[i].stride, 1));
  }
  x = reshape(x, {kFlat});
  for (std::size_t i = 0; i < net.fcs.size(); ++i, p += 2) {
    x = linear(x, leaves[p], leaves[p + 1]);
    if (i + 1 < net.fcs.size()) x = relu(x);
  }
  return add(scale(x, net.level_scale), Tensor::from({1}, {static_cast<float>(net.level_offset)}));
}

namespace {

std::vector<Tensor> bind(const EstimatorNet& net, bool trainable) {
  std::vector<Tensor> leaves;
  for (const auto& view : net.parameters()) {
    std::vector<float> values(view.values.begin(), view.values.end());
    leaves.push_back(trainable ? Tensor::leaf(view.shape, std::move(values))
                               : Tensor::from(view.shape, std::move(values)));
  }
  return leaves;
}

}  // namespace

double estimate_level(const EstimatorNet& net, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) < EstimatorNet::kInputSize ||
      image.dim(2) < EstimatorNet::kInputSize) {
    throw ContractViolation("estimator needs a 3xHxW image of at least 64x64, got " +
                            shape_to_string(image.shape()));
  }
  const auto leaves = bind(net, false);
  const Tensor input = center_crop(image, EstimatorNet::kInputSize, EstimatorNet::kInputSize);
  return estimator_forward(net, leaves, input).item();
}

double estimator_accuracy(const std::vector<double>& estimates, const std::vector<double>& truth,
                          const LevelRange& range) {
  range.validate();
  if (estimates.empty() || estimates.size() != truth.size()) {
    throw ContractViolation("estimator accuracy needs a non-empty, aligned evaluation set");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) total += std::abs(estimates[i] - truth[i]);
  const double mae = total / static_cast<double>(estimates.size());
  return 100.0 * (1.0 - mae / (range.max - range.min));
}

double estimator_accuracy(const EstimatorNet& net, const std::vector<LabeledImage>& eval_set,
                          const LevelRange& range) {
  range.validate();
  if (eval_set.empty()) throw ContractViolation("estimator accuracy needs a non-empty evaluation set");
  std::vector<double> estimates;
  std::vector<double> truth;
  for (const auto& sample : eval_set) {
    estimates.push_back(estimate_level(net, sample.image));
    truth.push_back(sample.level);
  }
  return estimator_accuracy(estimates, truth, range);
}

EstimatorNet train_estimator(const EstimatorTrainConfig& config, PatchSource& patches, std::ostream* progress) {
  if (config.levels.size() < 2) throw ContractViolation("estimator training needs at least two levels");
  if (patches.patch_size() != EstimatorNet::kInputSize) {
    throw ContractViolation("estimator training needs 64x64 patches");
  }
  const auto [lo, hi] = std::minmax_element(config.levels.begin(), config.levels.end());
  std::mt19937_64 rng(config.seed);
  EstimatorNet net = EstimatorNet::initialize(config.task, {*lo, *hi}, rng);
  Adam adam({config.learning_rate});
  std::uniform_int_distribution<std::size_t> pick(0, config.levels.size() - 1);

  for (std::size_t step = 0; step < config.steps; ++step) {
    if (config.lr_halve_every > 0) {
      adam.set_learning_rate(config.learning_rate * std::pow(0.5, static_cast<double>(step / config.lr_halve_every)));
    }
    const auto clean = patches.sample(config.batch_size);
    const auto leaves = bind(net, true);
    GradientTape tape;
    double batch_loss = 0.0;
    {
      TapeScope scope(tape);
      std::vector<Tensor> losses;
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const double level = config.levels[pick(rng)];
        const Tensor input = degrade(clean[i], config.task, level, derive_seed(config.seed, {step, i}));
        const Tensor estimate = estimator_forward(net, leaves, input);
        losses.push_back(l1_loss(estimate, Tensor::from({1}, {static_cast<float>(level)})));
      }
      const Tensor loss = scale(add_n(losses), 1.0 / static_cast<double>(losses.size()));
      batch_loss = loss.item();
      tape.backward(loss);
    }
    std::vector<std::vector<float>> grads;
    for (const auto& leaf : leaves) grads.push_back(leaf.grad());
    adam.step(net.parameters(), grads);
    if (progress && (step % 100 == 0 || step + 1 == config.steps)) {
      *progress << nlohmann::json{{"record", "estimator"}, {"step", step}, {"loss", batch_loss}}.dump() << '\n';
    }
  }
  return net;
}

}  // namespace hyperrestore
