#include "hyperrestore/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hyperrestore/seeding.hpp"

namespace hyperrestore {

using nlohmann::json;

namespace {

double parse_number(std::string_view text, std::string_view whole) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw ContractViolation("grid must look like min:max:step, got '" + std::string(whole) + "'");
  }
  return v;
}

std::string level_tag(double level) {
  std::ostringstream os;
  os << level;
  return os.str();
}

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
  const auto a = text.find(':');
  const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (b == std::string_view::npos) {
    throw ContractViolation("grid must look like min:max:step, got '" + std::string(text) + "'");
  }
  const double lo = parse_number(text.substr(0, a), text);
  const double hi = parse_number(text.substr(a + 1, b - a - 1), text);
  const double step = parse_number(text.substr(b + 1), text);
  if (step <= 0.0) throw ContractViolation("grid step must be positive");
  if (hi < lo) throw ContractViolation("grid is empty: max below min");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

SweepResult sweep(const HyperRestoreModel& model, const std::vector<Tensor>& degraded,
                  const std::vector<Tensor>& references, const std::vector<double>& levels) {
  if (levels.empty()) throw ContractViolation("sweep grid is empty");
  if (degraded.empty() || degraded.size() != references.size()) {
    throw ContractViolation("sweep needs matching, non-empty degraded and reference lists");
  }
  SweepResult result;
  for (double level : levels) {
    const double c = model.conditioning(level);
    const auto net = generate_network(model, c);
    double total = 0.0;
    for (std::size_t i = 0; i < degraded.size(); ++i) total += psnr(references[i], net.run(degraded[i]));
    result.curve.push_back({level, c, total / static_cast<double>(degraded.size())});
    if (result.curve.back().psnr_db > result.curve[result.best].psnr_db) result.best = result.curve.size() - 1;
  }
  return result;
}

BenchmarkReport benchmark(const HyperRestoreModel* model, TaskKind task, const std::vector<ImageRecord>& corpus,
                          const BenchmarkOptions& options) {
  if (corpus.empty()) throw ContractViolation("benchmark corpus is empty");
  if (options.levels.empty()) throw ContractViolation("benchmark needs at least one level");
  if (!options.bypass && model == nullptr) throw ContractViolation("benchmark needs a model unless bypassing");
  if (model && model->task != task) {
    throw ContractViolation("checkpoint was trained for " + std::string(to_string(model->task)) + ", not " +
                            std::string(to_string(task)));
  }
  BenchmarkReport report;
  report.task = task;
  for (double level : options.levels) {
    std::vector<ImageQuality> scores;
    std::optional<GeneratedNetwork> net;
    if (!options.bypass) net = generate_network(*model, model->conditioning(level));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Tensor& clean = corpus[i].pixels;
      const Tensor degraded = degrade(clean, task, level, derive_seed(options.seed, {level_bits(level), i}));
      const Tensor out = options.bypass ? degraded : net->run(degraded);
      scores.push_back({corpus[i].id, psnr(clean, out), ssim(clean, out)});
    }
    report.levels.push_back({level, QualityReport::from_images(std::move(scores))});
  }
  for (const auto& l : report.levels) {
    report.mean_psnr_db += l.quality.psnr_db;
    report.mean_ssim += l.quality.ssim;
  }
  report.mean_psnr_db /= static_cast<double>(report.levels.size());
  report.mean_ssim /= static_cast<double>(report.levels.size());
  return report;
}

void write_benchmark_report(std::ostream& out, const BenchmarkReport& report) {
  for (const auto& l : report.levels) write_report_lines(out, l.quality, level_tag(l.level));
  out << json{{"record", "mean"},
              {"task", to_string(report.task)},
              {"psnr_db", finite_psnr(report.mean_psnr_db)},
              {"ssim", report.mean_ssim}}
             .dump()
      << '\n';
}

void write_benchmark_table(std::ostream& out, const BenchmarkReport& report) {
  const std::string label = report.task == TaskKind::noise ? "sigma=" : report.task == TaskKind::jpeg ? "q=" : "x";
  out << std::left << std::setw(8) << "metric";
  for (const auto& l : report.levels) out << std::right << std::setw(12) << (label + level_tag(l.level));
  out << std::right << std::setw(12) << "Mean" << '\n';
  out << std::fixed;
  out << std::left << std::setw(8) << "PSNR";
  for (const auto& l : report.levels) out << std::right << std::setw(12) << std::setprecision(2) << l.quality.psnr_db;
  out << std::right << std::setw(12) << report.mean_psnr_db << '\n';
  out << std::left << std::setw(8) << "SSIM";
  for (const auto& l : report.levels) out << std::right << std::setw(12) << std::setprecision(4) << l.quality.ssim;
  out << std::right << std::setw(12) << report.mean_ssim << '\n';
  out << std::defaultfloat;
}

}  // namespace hyperrestore
