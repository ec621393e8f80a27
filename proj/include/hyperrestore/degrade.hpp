#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

enum class TaskKind { noise, jpeg, sr };

std::string_view to_string(TaskKind task);
/// Accepts "noise", "jpeg", "sr".
TaskKind parse_task(std::string_view name);

/// Trained span of raw levels (sigma, JPEG quality, or SR scale factor).
struct LevelRange {
  double min = 0.0;
  double max = 1.0;

  void validate() const;
  bool operator==(const LevelRange&) const = default;
};

struct DegradationSpec {
  TaskKind task = TaskKind::noise;
  double level = 0.0;
  LevelRange range;
  std::optional<std::uint64_t> seed;
};

struct NormalizedLevel {
  double c = 0.0;
  bool extrapolated = false;  // level outside the trained range
};

/// c = (level - min) / (max - min). Larger raw level always maps to larger c.
NormalizedLevel normalize_level(const DegradationSpec& spec);
double normalize_level(double level, const LevelRange& range);
double denormalize_level(double c, const LevelRange& range);

/// clamp(image + N(0, (sigma/255)^2), 0, 1), reproducible for a fixed seed.
Tensor add_gaussian_noise(const Tensor& image, double sigma, std::uint64_t seed);

/// Scaled quantization table (row-major 8x8) for the given quality, libjpeg convention.
std::array<int, 64> jpeg_quant_table(int quality, bool chroma);

/// 4:4:4 baseline-JPEG style round trip: full-range YCbCr, 8x8 DCT-II,
/// quantize/dequantize with the standard tables, inverse, clamp to [0, 1].
/// H and W must be multiples of 8.
Tensor jpeg_degrade(const Tensor& image, int quality);

/// Separable Catmull-Rom (a = -0.5) resampling with pixel-center alignment,
/// edge replication, and a widened kernel when shrinking.
Tensor resize_bicubic(const Tensor& image, std::size_t out_height, std::size_t out_width);

struct SrPair {
  Tensor low_res;
  Tensor pre_upsampled;
};

/// Bicubic downscale by 1/scale followed by bicubic upscale back to the input size.
SrPair sr_degrade(const Tensor& image, double scale);

/// Network input for a clean image at a raw level of the given task.
Tensor degrade(const Tensor& clean, TaskKind task, double level, std::uint64_t seed);

}  // namespace hyperrestore
