// Command-line front end: train, restore, benchmark, sweep, estimate, degrade, params, serve.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hyperrestore/checkpoint.hpp"
#include "hyperrestore/datasets.hpp"
#include "hyperrestore/degrade.hpp"
#include "hyperrestore/evaluation.hpp"
#include "hyperrestore/image_io.hpp"
#include "hyperrestore/metrics.hpp"
#include "hyperrestore/trainer.hpp"
#include "hyperrestore/tuner_service.hpp"

namespace fs = std::filesystem;
using namespace hyperrestore;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

HyperRestoreModel open_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path.string());
  return load_checkpoint(path);
}

Tensor open_image(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("image not found: " + path.string());
  return read_image(path);
}

std::string format_db(double db) {
  if (std::isinf(db)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << db;
  return os.str();
}

struct TrainArgs {
  fs::path config;
  fs::path corpus = "data/corpus";
  fs::path out = "model.ckpt";
  fs::path progress;
  std::string task;
  std::vector<double> levels;
  std::optional<std::size_t> steps, batch, patch, channels, resblocks, workers, lr_halve_every, log_every, validate_every;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::size_t validation_stride = 0;
  std::optional<std::size_t> estimator_steps;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (!a.task.empty()) config.task = parse_task(a.task);
  if (!a.levels.empty()) config.levels = a.levels;
  if (a.steps) config.steps = *a.steps;
  if (a.batch) config.batch_size = *a.batch;
  if (a.patch) config.patch_size = *a.patch;
  if (a.channels) config.arch.channels = *a.channels;
  if (a.resblocks) config.arch.num_resblocks = *a.resblocks;
  if (a.workers) config.workers = *a.workers;
  if (a.lr_halve_every) config.lr_halve_every = *a.lr_halve_every;
  if (a.seed) config.seed = *a.seed;
  if (a.log_every) config.log_every = *a.log_every;
  if (a.validate_every) config.validate_every = *a.validate_every;
  if (a.lr) config.adam.learning_rate = *a.lr;
  if (a.estimator_steps) {
    EstimatorTrainConfig est = config.estimator.value_or(EstimatorTrainConfig{});
    est.task = config.task;
    est.levels = config.levels;
    est.steps = *a.estimator_steps;
    est.seed = config.seed + 1;
    config.estimator = est;
  }
  try {
    config.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }

  if (!fs::is_directory(a.corpus)) throw UsageError("corpus directory not found: " + a.corpus.string());
  Corpus corpus = load_corpus(a.corpus);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
  std::vector<ImageRecord> train_records = corpus.records, validation;
  if (a.validation_stride > 1) {
    auto split = split_corpus(corpus.records, a.validation_stride);
    train_records = std::move(split.train);
    validation = std::move(split.validation);
  } else {
    validation = corpus.records;
  }

  std::ofstream progress_file;
  std::ostream* progress = &std::cout;
  if (!a.progress.empty()) {
    progress_file.open(a.progress);
    if (!progress_file) throw std::runtime_error("cannot write progress file " + a.progress.string());
    progress = &progress_file;
  }

  PatchSource patches(train_records, config.patch_size, config.seed, config.horizontal_flips);
  HyperRestoreModel model = train(config, patches, validation, progress);
  if (config.estimator) {
    PatchSource crops(train_records, EstimatorNet::kInputSize, config.estimator->seed, config.horizontal_flips);
    model.estimator = train_estimator(*config.estimator, crops, progress);
  }
  save_checkpoint(model, a.out);
  std::cerr << "wrote " << a.out.string() << '\n';
  return 0;
}

struct RestoreArgs {
  fs::path checkpoint, input, output, reference;
  std::optional<double> level;
  bool blind = false;
};

int run_restore(const RestoreArgs& a) {
  if (!a.level && !a.blind) throw UsageError("restore needs --level or --blind");
  if (a.level && a.blind) throw UsageError("--level and --blind are exclusive");
  const HyperRestoreModel model = open_checkpoint(a.checkpoint);
  const Tensor input = open_image(a.input);
  double level = 0.0;
  if (a.blind) {
    if (!model.estimator) throw UsageError("--blind needs a checkpoint with an estimator; pass --level instead");
    level = estimate_level(*model.estimator, input);
    std::cout << "estimated level: " << level << '\n';
  } else {
    level = *a.level;
    if (!std::isfinite(level)) throw UsageError("--level must be finite");
  }
  const auto c = normalize_level(DegradationSpec{model.task, level, model.range});
  if (c.extrapolated) std::cerr << "note: level " << level << " lies outside the trained range\n";
  const Tensor restored = restore(model, input, c.c);
  write_image(a.output, restored);
  if (!a.reference.empty()) {
    const Tensor ref = open_image(a.reference);
    std::cout << "input PSNR: " << format_db(psnr(ref, input)) << " dB\n";
    std::cout << "output PSNR: " << format_db(psnr(ref, restored)) << " dB\n";
  }
  return 0;
}

struct BenchmarkArgs {
  fs::path checkpoint, corpus, report, table;
  std::string task;
  std::vector<double> levels;
  std::uint64_t seed = 1234;
  bool bypass = false;
};

int run_benchmark(const BenchmarkArgs& a) {
  std::optional<HyperRestoreModel> model;
  if (!a.bypass || !a.checkpoint.empty()) {
    if (a.checkpoint.empty()) throw UsageError("benchmark needs --checkpoint unless --bypass is given");
    model = open_checkpoint(a.checkpoint);
  }
  TaskKind task = model ? model->task : TaskKind::noise;
  if (!a.task.empty()) task = parse_task(a.task);
  std::vector<double> levels = a.levels;
  if (levels.empty() && model) levels = model->metadata.trained_levels;
  if (levels.empty()) throw UsageError("benchmark needs --levels");
  if (!fs::is_directory(a.corpus)) throw UsageError("corpus directory not found: " + a.corpus.string());
  Corpus corpus = load_corpus(a.corpus);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';

  const auto report = benchmark(model ? &*model : nullptr, task, corpus.records, {levels, a.seed, a.bypass});
  if (!a.report.empty()) {
    std::ofstream out(a.report, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report " + a.report.string());
    write_benchmark_report(out, report);
  }
  write_benchmark_table(std::cout, report);
  return 0;
}

struct SweepArgs {
  fs::path checkpoint, input, reference;
  std::string grid;
};

int run_sweep(const SweepArgs& a) {
  std::vector<double> grid;
  try {
    grid = parse_grid(a.grid);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const HyperRestoreModel model = open_checkpoint(a.checkpoint);
  const auto result = sweep(model, {open_image(a.input)}, {open_image(a.reference)}, grid);
  std::cout << std::setw(10) << "level" << std::setw(10) << "c" << std::setw(12) << "PSNR" << '\n';
  for (const auto& p : result.curve) {
    std::cout << std::setw(10) << p.level << std::setw(10) << std::setprecision(4) << p.c << std::setw(12)
              << format_db(p.psnr_db) << '\n';
  }
  const auto& best = result.curve[result.best];
  std::cout << "best level " << best.level << " (c = " << best.c << "), PSNR " << format_db(best.psnr_db)
            << " dB\n";
  return 0;
}

int run_estimate(const fs::path& checkpoint, const fs::path& input) {
  const HyperRestoreModel model = open_checkpoint(checkpoint);
  if (!model.estimator) throw UsageError("checkpoint has no estimator: " + checkpoint.string());
  const double level = estimate_level(*model.estimator, open_image(input));
  std::cout << level << '\n';
  return 0;
}

struct DegradeArgs {
  fs::path input, output;
  std::string task = "noise";
  double level = 25;
  std::uint64_t seed = 0;
};

int run_degrade(const DegradeArgs& a) {
  const Tensor clean = open_image(a.input);
  write_image(a.output, degrade(clean, parse_task(a.task), a.level, a.seed));
  return 0;
}

void print_breakdown(const ParameterBreakdown& p, std::size_t kernels) {
  std::cout << "head/tail (shared):  " << p.head + p.tail << '\n';
  std::cout << "meta blocks:         " << p.resblock_meta << "  (2 x " << kernels << " generated kernels)\n";
  std::cout << "total:               " << p.total << '\n';
  std::cout << "the count does not depend on the number of served levels k\n";
}

int run_params(const fs::path& checkpoint, const fs::path& config) {
  if (checkpoint.empty() == config.empty()) throw UsageError("params needs exactly one of --checkpoint, --config");
  if (!checkpoint.empty()) {
    const HyperRestoreModel model = open_checkpoint(checkpoint);
    std::cout << "channels " << model.arch.channels << ", resblocks " << model.arch.num_resblocks << '\n';
    print_breakdown(model.parameter_counts(), model.arch.num_generated_kernels());
    return 0;
  }
  if (!fs::exists(config)) throw UsageError("config not found: " + config.string());
  const TrainConfig cfg = load_train_config(config);
  std::cout << "channels " << cfg.arch.channels << ", resblocks " << cfg.arch.num_resblocks << '\n';
  print_breakdown(count_total_parameters(cfg.arch), cfg.arch.num_generated_kernels());
  return 0;
}

struct ServeArgs {
  fs::path checkpoint, static_dir = "ui";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_upload = 8 << 20;
  double session_timeout_s = 900;
};

int run_serve(const ServeArgs& a) {
  ServiceOptions options;
  options.max_upload_bytes = a.max_upload;
  options.session_timeout = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::duration<double>(a.session_timeout_s));
  options.static_dir = a.static_dir;
  TunerService service(options);
  if (!a.checkpoint.empty()) service.load_model(open_checkpoint(a.checkpoint));
  std::cerr << "listening on " << a.host << ':' << a.port << '\n';
  if (!service.listen(a.host, a.port)) throw std::runtime_error("cannot bind " + a.host + ":" + std::to_string(a.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive image restoration with hypernetwork-generated kernels"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model on a corpus and write a checkpoint");
  train_cmd->add_option("--config", train_args.config, "JSON training config")->check(CLI::ExistingFile);
  train_cmd->add_option("--corpus", train_args.corpus, "directory of PNG/PPM images");
  train_cmd->add_option("--out", train_args.out, "checkpoint path");
  train_cmd->add_option("--progress", train_args.progress, "JSON-lines progress file (default stdout)");
  train_cmd->add_option("--task", train_args.task, "noise | jpeg | sr");
  train_cmd->add_option("--levels", train_args.levels, "raw training levels")->delimiter(',');
  train_cmd->add_option("--steps", train_args.steps);
  train_cmd->add_option("--batch", train_args.batch, "patches per level per step");
  train_cmd->add_option("--patch", train_args.patch, "patch side");
  train_cmd->add_option("--channels", train_args.channels);
  train_cmd->add_option("--resblocks", train_args.resblocks);
  train_cmd->add_option("--workers", train_args.workers, "threads for the per-level passes");
  train_cmd->add_option("--lr", train_args.lr);
  train_cmd->add_option("--lr-halve-every", train_args.lr_halve_every);
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--log-every", train_args.log_every, "steps between progress records");
  train_cmd->add_option("--validate-every", train_args.validate_every, "steps between validation records");
  train_cmd->add_option("--validation-stride", train_args.validation_stride,
                        "hold out every n-th image for validation (0: validate on all)");
  train_cmd->add_option("--estimator-steps", train_args.estimator_steps, "also train a blind estimator");

  RestoreArgs restore_args;
  auto* restore_cmd = app.add_subcommand("restore", "restore one image at a given or estimated level");
  restore_cmd->add_option("--checkpoint", restore_args.checkpoint)->required();
  restore_cmd->add_option("--input", restore_args.input)->required();
  restore_cmd->add_option("--output", restore_args.output)->required();
  restore_cmd->add_option("--level", restore_args.level, "raw level (sigma, quality or scale)");
  restore_cmd->add_flag("--blind", restore_args.blind, "use the checkpoint's estimator");
  restore_cmd->add_option("--reference", restore_args.reference, "clean image; prints PSNR");

  BenchmarkArgs bench_args;
  auto* bench_cmd = app.add_subcommand("benchmark", "per-level and mean PSNR/SSIM over a corpus");
  bench_cmd->add_option("--checkpoint", bench_args.checkpoint);
  bench_cmd->add_option("--corpus", bench_args.corpus)->required();
  bench_cmd->add_option("--task", bench_args.task);
  bench_cmd->add_option("--levels", bench_args.levels)->delimiter(',');
  bench_cmd->add_option("--report", bench_args.report, "JSON-lines report path");
  bench_cmd->add_option("--seed", bench_args.seed);
  bench_cmd->add_flag("--bypass", bench_args.bypass, "score the degraded inputs (identity baseline)");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "PSNR as a function of the conditioning level");
  sweep_cmd->add_option("--checkpoint", sweep_args.checkpoint)->required();
  sweep_cmd->add_option("--input", sweep_args.input)->required();
  sweep_cmd->add_option("--reference", sweep_args.reference)->required();
  sweep_cmd->add_option("--grid", sweep_args.grid, "min:max:step in raw units")->required();

  fs::path estimate_ckpt, estimate_input;
  auto* estimate_cmd = app.add_subcommand("estimate", "blind level estimate of an image");
  estimate_cmd->add_option("--checkpoint", estimate_ckpt)->required();
  estimate_cmd->add_option("--input", estimate_input)->required();

  DegradeArgs degrade_args;
  auto* degrade_cmd = app.add_subcommand("degrade", "apply a synthetic degradation");
  degrade_cmd->add_option("--input", degrade_args.input)->required();
  degrade_cmd->add_option("--output", degrade_args.output)->required();
  degrade_cmd->add_option("--task", degrade_args.task);
  degrade_cmd->add_option("--level", degrade_args.level);
  degrade_cmd->add_option("--seed", degrade_args.seed);

  fs::path params_ckpt, params_config;
  auto* params_cmd = app.add_subcommand("params", "parameter breakdown");
  params_cmd->add_option("--checkpoint", params_ckpt);
  params_cmd->add_option("--config", params_config);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP tuning service");
  serve_cmd->add_option("--checkpoint", serve_args.checkpoint);
  serve_cmd->add_option("--host", serve_args.host);
  serve_cmd->add_option("--port", serve_args.port);
  serve_cmd->add_option("--static-dir", serve_args.static_dir, "UI bundle served at /");
  serve_cmd->add_option("--max-upload", serve_args.max_upload, "bytes");
  serve_cmd->add_option("--session-timeout", serve_args.session_timeout_s, "idle seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*restore_cmd) return run_restore(restore_args);
    if (*bench_cmd) return run_benchmark(bench_args);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*estimate_cmd) return run_estimate(estimate_ckpt, estimate_input);
    if (*degrade_cmd) return run_degrade(degrade_args);
    if (*params_cmd) return run_params(params_ckpt, params_config);
    if (*serve_cmd) return run_serve(serve_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
