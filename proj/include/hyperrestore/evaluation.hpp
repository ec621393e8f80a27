#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hyperrestore/datasets.hpp"
#include "hyperrestore/metrics.hpp"
#include "hyperrestore/model.hpp"

namespace hyperrestore {

/// Raw-level grid parsed from "min:max:step" (inclusive of max up to rounding).
std::vector<double> parse_grid(std::string_view text);

struct SweepPoint {
  double level = 0.0;
  double c = 0.0;
  double psnr_db = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> curve;
  std::size_t best = 0;  // index into curve; first maximum wins
};

/// Mean PSNR over the pairs at every grid level.
SweepResult sweep(const HyperRestoreModel& model, const std::vector<Tensor>& degraded,
                  const std::vector<Tensor>& references, const std::vector<double>& levels);

struct BenchmarkOptions {
  std::vector<double> levels;
  std::uint64_t seed = 1234;
  bool bypass = false;  // report the degraded input itself
};

struct LevelReport {
  double level = 0.0;
  QualityReport quality;
};

struct BenchmarkReport {
  TaskKind task = TaskKind::noise;
  std::vector<LevelReport> levels;
  double mean_psnr_db = 0.0;  // mean over levels
  double mean_ssim = 0.0;
};

/// Degrades each corpus image at each level with seeds derived from
/// (seed, level, image index), restores it at that level and scores it.
BenchmarkReport benchmark(const HyperRestoreModel* model, TaskKind task, const std::vector<ImageRecord>& corpus,
                          const BenchmarkOptions& options);

/// JSON lines: per-image and summary records for each level, then a "mean" record.
void write_benchmark_report(std::ostream& out, const BenchmarkReport& report);

/// Text table with one PSNR/SSIM column pair per level and a "Mean" column.
void write_benchmark_table(std::ostream& out, const BenchmarkReport& report);

}  // namespace hyperrestore
