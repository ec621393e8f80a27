#include "hyperrestore/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hyperrestore/ops.hpp"

namespace hyperrestore {

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::noise: return "noise";
    case TaskKind::jpeg: return "jpeg";
    case TaskKind::sr: return "sr";
  }
  return "unknown";
}

TaskKind parse_task(std::string_view name) {
  if (name == "noise") return TaskKind::noise;
  if (name == "jpeg") return TaskKind::jpeg;
  if (name == "sr") return TaskKind::sr;
  throw ContractViolation("unknown task '" + std::string(name) + "' (expected noise, jpeg or sr)");
}

void LevelRange::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
    throw ContractViolation("degenerate level range [" + std::to_string(min) + ", " +
                            std::to_string(max) + "]");
  }
}

double normalize_level(double level, const LevelRange& range) {
  range.validate();
  if (!std::isfinite(level)) throw ContractViolation("level is not finite");
  return (level - range.min) / (range.max - range.min);
}

NormalizedLevel normalize_level(const DegradationSpec& spec) {
  const double c = normalize_level(spec.level, spec.range);
  return {c, c < 0.0 || c > 1.0};
}

double denormalize_level(double c, const LevelRange& range) {
  range.validate();
  return c * (range.max - range.min) + range.min;
}

Tensor add_gaussian_noise(const Tensor& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ContractViolation("noise sigma must be non-negative");
  std::vector<float> values(image.data().begin(), image.data().end());
  if (sigma == 0.0) return Tensor::from(image.shape(), std::move(values));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma / 255.0);
  for (auto& v : values) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  return Tensor::from(image.shape(), std::move(values));
}

namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChrominanceTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// Orthonormal DCT-II basis: basis[u][x] = C(u) cos((2x+1) u pi / 16).
std::array<std::array<double, 8>, 8> dct_basis() {
  std::array<std::array<double, 8>, 8> m{};
  for (int u = 0; u < 8; ++u) {
    const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int x = 0; x < 8; ++x) m[u][x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  }
  return m;
}

void quantize_block(std::array<double, 64>& block, const std::array<int, 64>& table,
                    const std::array<std::array<double, 8>, 8>& basis) {
  std::array<double, 64> tmp{};
  std::array<double, 64> coeff{};
  // rows then columns
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += basis[u][x] * block[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += basis[v][y] * tmp[y * 8 + u];
      coeff[v * 8 + u] = s;
    }
  for (int i = 0; i < 64; ++i) coeff[i] = std::round(coeff[i] / table[i]) * table[i];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += basis[u][x] * coeff[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += basis[v][y] * tmp[v * 8 + x];
      block[y * 8 + x] = s;
    }
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality, bool chroma) {
  if (quality < 1 || quality > 100) {
    throw ContractViolation("JPEG quality " + std::to_string(quality) + " outside [1, 100]");
  }
  const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = chroma ? kChrominanceTable : kLuminanceTable;
  std::array<int, 64> out{};
  for (int i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * s + 50) / 100, 1, 255);
  return out;
}

Tensor jpeg_degrade(const Tensor& image, int quality) {
  const auto luma_table = jpeg_quant_table(quality, false);
  const auto chroma_table = jpeg_quant_table(quality, true);
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ContractViolation("jpeg_degrade expects 3xHxW, got " + shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (h % 8 != 0 || w % 8 != 0) {
    throw ContractViolation("jpeg_degrade needs H and W multiples of 8, got " + shape_to_string(image.shape()));
  }
  const std::size_t plane = h * w;
  auto src = image.data();

  // Full-range BT.601 YCbCr on the 0..255 scale, level shifted by 128.
  std::vector<double> ycc(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    const double r = 255.0 * src[i];
    const double g = 255.0 * src[plane + i];
    const double b = 255.0 * src[2 * plane + i];
    ycc[i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
    ycc[plane + i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
    ycc[2 * plane + i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
  }

  const auto basis = dct_basis();
  std::array<double, 64> block{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto& table = ch == 0 ? luma_table : chroma_table;
    double* p = ycc.data() + ch * plane;
    for (std::size_t by = 0; by < h; by += 8)
      for (std::size_t bx = 0; bx < w; bx += 8) {
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) block[y * 8 + x] = p[(by + y) * w + bx + x];
        quantize_block(block, table, basis);
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) p[(by + y) * w + bx + x] = block[y * 8 + x];
      }
  }

  Tensor out = Tensor::zeros(image.shape());
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < plane; ++i) {
    const double y = ycc[i] + 128.0;
    const double cb = ycc[plane + i];
    const double cr = ycc[2 * plane + i];
    const double rgb[3] = {y + 1.402 * cr, y - 0.344136 * cb - 0.714136 * cr, y + 1.772 * cb};
    for (std::size_t ch = 0; ch < 3; ++ch) {
      dst[ch * plane + i] = static_cast<float>(std::clamp(rgb[ch] / 255.0, 0.0, 1.0));
    }
  }
  return out;
}

namespace {

double catmull_rom(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::size_t count = 0;                 // taps per output sample
  std::vector<std::size_t> index;        // out_len * count, clamped source indices
  std::vector<double> weight;            // out_len * count, normalized
};

Taps resample_taps(std::size_t in_len, std::size_t out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const double kscale = std::min(scale, 1.0);
  const double width = 4.0 / kscale;
  Taps taps;
  taps.count = static_cast<std::size_t>(std::ceil(width)) + 2;
  taps.index.resize(out_len * taps.count);
  taps.weight.resize(out_len * taps.count);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto left = static_cast<std::ptrdiff_t>(std::floor(u - width / 2.0));
    double total = 0.0;
    for (std::size_t t = 0; t < taps.count; ++t) {
      const std::ptrdiff_t j = left + static_cast<std::ptrdiff_t>(t);
      const double wv = kscale * catmull_rom(kscale * (u - static_cast<double>(j)));
      taps.index[i * taps.count + t] =
          static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(in_len) - 1));
      taps.weight[i * taps.count + t] = wv;
      total += wv;
    }
    for (std::size_t t = 0; t < taps.count; ++t) taps.weight[i * taps.count + t] /= total;
  }
  return taps;
}

}  // namespace

Tensor resize_bicubic(const Tensor& image, std::size_t out_height, std::size_t out_width) {
  if (image.rank() != 3) throw ContractViolation("resize expects CxHxW, got " + shape_to_string(image.shape()));
  if (out_height == 0 || out_width == 0) throw ContractViolation("resize target must be non-empty");
  const std::size_t c = image.dim(0);
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  const Taps tx = resample_taps(w, out_width);
  const Taps ty = resample_taps(h, out_height);
  auto src = image.data();

  std::vector<double> rows(c * h * out_width);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y) {
      const float* in = src.data() + (ch * h + y) * w;
      double* out = rows.data() + (ch * h + y) * out_width;
      for (std::size_t x = 0; x < out_width; ++x) {
        double s = 0.0;
        for (std::size_t t = 0; t < tx.count; ++t) s += tx.weight[x * tx.count + t] * in[tx.index[x * tx.count + t]];
        out[x] = s;
      }
    }

  Tensor result = Tensor::zeros({c, out_height, out_width});
  auto dst = result.mutable_data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < out_height; ++y)
      for (std::size_t x = 0; x < out_width; ++x) {
        double s = 0.0;
        for (std::size_t t = 0; t < ty.count; ++t) {
          s += ty.weight[y * ty.count + t] * rows[(ch * h + ty.index[y * ty.count + t]) * out_width + x];
        }
        dst[(ch * out_height + y) * out_width + x] = static_cast<float>(s);
      }
  return result;
}

SrPair sr_degrade(const Tensor& image, double scale) {
  if (!(scale >= 1.0) || !std::isfinite(scale)) {
    throw ContractViolation("super-resolution scale must be >= 1, got " + std::to_string(scale));
  }
  const auto h = image.dim(1);
  const auto w = image.dim(2);
  const auto lh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h / scale)));
  const auto lw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w / scale)));
  SrPair pair;
  pair.low_res = resize_bicubic(image, lh, lw);
  pair.pre_upsampled = clamp01(resize_bicubic(pair.low_res, h, w));
  return pair;
}

Tensor degrade(const Tensor& clean, TaskKind task, double level, std::uint64_t seed) {
  switch (task) {
    case TaskKind::noise: return add_gaussian_noise(clean, level, seed);
    case TaskKind::jpeg: return jpeg_degrade(clean, static_cast<int>(std::lround(level)));
    case TaskKind::sr: return sr_degrade(clean, level).pre_upsampled;
  }
  throw ContractViolation("unknown task");
}

}  // namespace hyperrestore
