#include "hyperrestore/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "hyperrestore/metrics.hpp"
#include "hyperrestore/ops.hpp"
#include "hyperrestore/seeding.hpp"

namespace hyperrestore {

using nlohmann::json;

void TrainConfig::validate() const {
  if (levels.size() < 2) throw ContractViolation("training needs at least two degradation levels");
  std::set<double> distinct;
  for (double l : levels) {
    if (!std::isfinite(l)) throw ContractViolation("training level is not finite");
    if (!distinct.insert(l).second) throw ContractViolation("duplicate training level " + std::to_string(l));
  }
  if (batch_size == 0) throw ContractViolation("batch_size must be positive");
  if (patch_size == 0 || patch_size % 8 != 0) throw ContractViolation("patch_size must be a positive multiple of 8");
  if (workers == 0) throw ContractViolation("workers must be positive");
  if (!(adam.learning_rate > 0.0)) throw ContractViolation("learning rate must be positive");
  arch.validate();
  level_range().validate();
}

TrainConfig TrainConfig::normalized() const {
  TrainConfig out = *this;
  std::sort(out.levels.begin(), out.levels.end());
  return out;
}

LevelRange TrainConfig::level_range() const {
  if (range) return *range;
  if (levels.empty()) throw ContractViolation("no training levels");
  const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end());
  return {*lo, *hi};
}

double TrainConfig::learning_rate_at(std::size_t step) const {
  if (lr_halve_every == 0) return adam.learning_rate;
  return adam.learning_rate * std::pow(0.5, static_cast<double>(step / lr_halve_every));
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.task = parse_task(j.value("task", std::string("noise")));
  if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
  if (j.contains("level_range")) c.range = LevelRange{j.at("level_range").at(0), j.at("level_range").at(1)};
  if (j.contains("arch")) {
    const auto& a = j.at("arch");
    c.arch.channels = a.value("channels", c.arch.channels);
    c.arch.num_resblocks = a.value("num_resblocks", c.arch.num_resblocks);
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.steps = j.value("steps", c.steps);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  c.lr_halve_every = j.value("lr_halve_every", c.lr_halve_every);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.validate_every = j.value("validate_every", c.validate_every);
  c.log_every = j.value("log_every", c.log_every);
  c.horizontal_flips = j.value("horizontal_flips", c.horizontal_flips);
  if (j.contains("estimator") && !j.at("estimator").is_null()) {
    const auto& e = j.at("estimator");
    EstimatorTrainConfig est;
    est.task = c.task;
    est.levels = e.value("levels", c.levels);
    est.steps = e.value("steps", est.steps);
    est.batch_size = e.value("batch_size", est.batch_size);
    est.learning_rate = e.value("learning_rate", est.learning_rate);
    est.lr_halve_every = e.value("lr_halve_every", est.lr_halve_every);
    est.seed = e.value("seed", c.seed + 1);
    c.estimator = est;
  }
  return c;
}

json TrainConfig::to_json() const {
  json j = {{"task", to_string(task)},
            {"levels", levels},
            {"arch", {{"channels", arch.channels}, {"num_resblocks", arch.num_resblocks}}},
            {"batch_size", batch_size},
            {"patch_size", patch_size},
            {"steps", steps},
            {"learning_rate", adam.learning_rate},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon},
            {"lr_halve_every", lr_halve_every},
            {"grad_clip", grad_clip},
            {"seed", seed},
            {"workers", workers},
            {"validate_every", validate_every},
            {"log_every", log_every},
            {"horizontal_flips", horizontal_flips}};
  if (range) j["level_range"] = {range->min, range->max};
  if (estimator) {
    j["estimator"] = {{"levels", estimator->levels},
                      {"steps", estimator->steps},
                      {"batch_size", estimator->batch_size},
                      {"learning_rate", estimator->learning_rate},
                      {"lr_halve_every", estimator->lr_halve_every},
                      {"seed", estimator->seed}};
  }
  return j;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open training config " + path.string());
  try {
    return TrainConfig::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ContractViolation("invalid training config " + path.string() + ": " + e.what());
  }
}

LevelPass level_pass(const HyperRestoreModel& model, double level, std::span<const TrainSample> samples) {
  if (samples.empty()) throw ContractViolation("level pass needs at least one sample");
  const double c = model.conditioning(level);
  const BoundModel bound(model, true);
  GradientTape tape;
  LevelPass pass;
  {
    TapeScope scope(tape);
    const auto kernels = bound.kernels(c);
    std::vector<Tensor> losses;
    losses.reserve(samples.size());
    for (const auto& sample : samples) {
      const Tensor input = degrade(sample.clean, model.task, level, sample.seed);
      const Tensor output = forward(input, kernels, bound.shared(), model.arch);
      losses.push_back(l1_loss(output, sample.clean));
    }
    const Tensor loss = scale(add_n(losses), 1.0 / static_cast<double>(losses.size()));
    pass.loss = loss.item();
    tape.backward(loss);
  }
  pass.grads = bound.gradients();
  return pass;
}

StepResult train_step(TrainState& state, std::span<const double> levels, std::span<const TrainSample> batch,
                      const StepOptions& options) {
  const std::size_t k = levels.size();
  if (k == 0) throw ContractViolation("train_step needs at least one level");
  std::vector<std::vector<TrainSample>> per_level(k);
  for (const auto& sample : batch) {
    if (sample.level_index >= k) throw ContractViolation("sample level index out of range");
    per_level[sample.level_index].push_back(sample);
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (per_level[i].empty()) {
      throw ContractViolation("batch has no sample for level " + std::to_string(levels[i]));
    }
  }

  std::vector<LevelPass> passes(k);
  std::vector<std::exception_ptr> errors(k);
  auto run = [&](std::size_t i) {
    try {
      passes[i] = level_pass(state.model, levels[i], per_level[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, k));
  if (workers == 1) {
    for (std::size_t i = 0; i < k; ++i) run(i);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t i = w; i < k; i += workers) run(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  StepResult result;
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(passes[i].loss)) {
      throw TrainingError("non-finite loss at level " + std::to_string(levels[i]) + ", step " +
                          std::to_string(state.step));
    }
    result.level_losses.push_back(passes[i].loss);
    result.total_loss += passes[i].loss;
  }
  // Barrier: sum per-level gradients in level order.
  result.grads = std::move(passes[0].grads);
  for (std::size_t i = 1; i < k; ++i) {
    for (std::size_t p = 0; p < result.grads.size(); ++p) {
      auto& dst = result.grads[p];
      const auto& src = passes[i].grads[p];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }

  auto update = result.grads;
  result.grad_norm = options.grad_clip > 0.0 ? clip_global_norm(update, options.grad_clip)
                                             : clip_global_norm(update, std::numeric_limits<double>::infinity());
  state.optimizer.set_learning_rate(options.learning_rate);
  state.optimizer.step(state.model.parameters(), update);

  if (state.loss_history.size() < k) state.loss_history.resize(k);
  for (std::size_t i = 0; i < k; ++i) state.loss_history[i].push_back(result.level_losses[i]);
  ++state.step;
  return result;
}

std::vector<LevelValidation> validate_levels(const HyperRestoreModel& model, std::span<const double> levels,
                                             const std::vector<ImageRecord>& images, std::uint64_t seed) {
  std::vector<LevelValidation> out;
  if (images.empty()) return out;
  for (double level : levels) {
    const auto net = generate_network(model, model.conditioning(level));
    double restored = 0.0;
    double input = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Tensor& clean = images[i].pixels;
      const Tensor degraded = degrade(clean, model.task, level, derive_seed(seed, {level_bits(level), i}));
      input += psnr(clean, degraded);
      restored += psnr(clean, net.run(degraded));
    }
    const double n = static_cast<double>(images.size());
    out.push_back({level, restored / n, input / n});
  }
  return out;
}

HyperRestoreModel train(const TrainConfig& raw_config, PatchSource& patches, const std::vector<ImageRecord>& validation,
                        std::ostream* progress) {
  raw_config.validate();
  const TrainConfig config = raw_config.normalized();
  if (patches.patch_size() != config.patch_size) {
    throw ContractViolation("patch source yields " + std::to_string(patches.patch_size()) +
                            "px patches, config asks for " + std::to_string(config.patch_size));
  }
  TrainState state{HyperRestoreModel::initialize(config.arch, config.task, config.level_range(), config.seed),
                   Adam(config.adam), 0, {}};
  state.model.metadata.trained_levels = config.levels;

  auto emit_validation = [&](std::size_t step) {
    if (!progress || validation.empty()) return;
    for (const auto& v : validate_levels(state.model, config.levels, validation, config.seed)) {
      *progress << json{{"record", "validation"},
                        {"step", step},
                        {"level", v.level},
                        {"psnr_db", finite_psnr(v.restored_psnr_db)},
                        {"input_psnr_db", finite_psnr(v.input_psnr_db)}}
                       .dump()
                << '\n';
    }
  };

  const std::size_t k = config.levels.size();
  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto clean = patches.sample(config.batch_size);
    std::vector<TrainSample> batch;
    batch.reserve(k * clean.size());
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t b = 0; b < clean.size(); ++b) {
        batch.push_back({clean[b], i, derive_seed(config.seed, {step, level_bits(config.levels[i]), b})});
      }
    }
    const StepOptions options{config.grad_clip, config.workers, config.learning_rate_at(step)};
    const StepResult result = train_step(state, config.levels, batch, options);

    if (progress && config.log_every > 0 && (step % config.log_every == 0 || step + 1 == config.steps)) {
      json losses = json::object();
      for (std::size_t i = 0; i < k; ++i) losses[json(config.levels[i]).dump()] = result.level_losses[i];
      *progress << json{{"record", "train"},         {"step", step},
                        {"lr", options.learning_rate}, {"total_loss", result.total_loss},
                        {"level_losses", losses},      {"grad_norm", result.grad_norm}}
                       .dump()
                << '\n';
    }
    if (config.validate_every > 0 && (step + 1) % config.validate_every == 0 && step + 1 < config.steps) {
      emit_validation(step + 1);
    }
  }
  state.model.metadata.steps = config.steps;
  emit_validation(config.steps);
  return state.model;
}

}  // namespace hyperrestore
