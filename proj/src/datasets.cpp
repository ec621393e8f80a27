#include "hyperrestore/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "hyperrestore/image_io.hpp"
#include "hyperrestore/ops.hpp"

namespace hyperrestore {

Tensor center_crop(const Tensor& image, std::size_t height, std::size_t width) {
  if (height > image.dim(1) || width > image.dim(2)) {
    throw ContractViolation("center crop " + std::to_string(height) + "x" + std::to_string(width) +
                            " larger than image " + shape_to_string(image.shape()));
  }
  return crop(image, (image.dim(1) - height) / 2, (image.dim(2) - width) / 2, height, width);
}

Tensor center_crop_to_multiple(const Tensor& image, std::size_t multiple) {
  return center_crop(image, image.dim(1) / multiple * multiple, image.dim(2) / multiple * multiple);
}

Tensor flip_horizontal(const Tensor& image) {
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out = Tensor::zeros(image.shape());
  auto src = image.data();
  auto dst = out.mutable_data();
  for (std::size_t r = 0; r < c * h; ++r)
    for (std::size_t x = 0; x < w; ++x) dst[r * w + x] = src[r * w + (w - 1 - x)];
  return out;
}

Corpus load_corpus(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) throw DatasetError("corpus directory does not exist: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  Corpus corpus;
  for (const auto& file : files) {
    try {
      Tensor pixels = read_image(file);
      if (pixels.dim(1) < 16 || pixels.dim(2) < 16) {
        corpus.warnings.push_back(file.string() + ": smaller than 16x16, skipped");
        continue;
      }
      corpus.records.push_back({file.stem().string(), center_crop_to_multiple(pixels, 8), file});
    } catch (const ImageIoError& e) {
      corpus.warnings.push_back(std::string(e.what()) + ", skipped");
    }
  }
  if (corpus.records.empty()) throw DatasetError("no usable images in corpus directory " + directory.string());
  return corpus;
}

CorpusSplit split_corpus(const std::vector<ImageRecord>& records, std::size_t stride) {
  if (stride < 2) throw ContractViolation("split stride must be at least 2");
  CorpusSplit split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (i % stride == stride - 1 ? split.validation : split.train).push_back(records[i]);
  }
  return split;
}

PatchSource::PatchSource(std::vector<ImageRecord> records, std::size_t patch_size, std::uint64_t seed,
                         bool horizontal_flips)
    : records_(std::move(records)), patch_size_(patch_size), flips_(horizontal_flips), rng_(seed) {
  if (records_.empty()) throw DatasetError("patch source needs at least one image");
  if (patch_size_ == 0) throw ContractViolation("patch size must be positive");
  for (const auto& r : records_) {
    if (patch_size_ > std::min(r.pixels.dim(1), r.pixels.dim(2))) {
      throw ContractViolation("patch size " + std::to_string(patch_size_) + " exceeds image '" + r.id + "' " +
                              shape_to_string(r.pixels.shape()));
    }
  }
}

std::vector<Tensor> PatchSource::sample(std::size_t n) {
  std::vector<Tensor> patches;
  patches.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& img = records_[std::uniform_int_distribution<std::size_t>(0, records_.size() - 1)(rng_)].pixels;
    const auto top = std::uniform_int_distribution<std::size_t>(0, img.dim(1) - patch_size_)(rng_);
    const auto left = std::uniform_int_distribution<std::size_t>(0, img.dim(2) - patch_size_)(rng_);
    Tensor patch = crop(img, top, left, patch_size_, patch_size_);
    if (flips_ && std::uniform_int_distribution<int>(0, 1)(rng_) == 1) patch = flip_horizontal(patch);
    patches.push_back(std::move(patch));
  }
  return patches;
}

std::vector<Tensor> sample_patches(PatchSource& source, std::size_t n) { return source.sample(n); }

namespace {

using Pixel = std::array<double, 3>;
using Painter = std::function<Pixel(double x, double y)>;  // x, y in [0, 1)

Tensor paint(std::size_t size, const Painter& painter) {
  Tensor t = Tensor::zeros({3, size, size});
  auto dst = t.mutable_data();
  const std::size_t plane = size * size;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const Pixel p = painter((x + 0.5) / size, (y + 0.5) / size);
      for (std::size_t c = 0; c < 3; ++c) dst[c * plane + y * size + x] = static_cast<float>(std::clamp(p[c], 0.0, 1.0));
    }
  return t;
}

// Periodic smooth random field: sum of a few random cosines.
Painter smooth_field(std::uint64_t seed, int waves, double max_freq) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp[3];
  };
  std::vector<Wave> list;
  for (int i = 0; i < waves; ++i) {
    Wave w{};
    w.fx = (u(rng) * 2 - 1) * max_freq;
    w.fy = (u(rng) * 2 - 1) * max_freq;
    w.phase = u(rng) * 2 * std::numbers::pi;
    for (double& a : w.amp) a = (u(rng) * 2 - 1) / waves;
    list.push_back(w);
  }
  return [list](double x, double y) {
    Pixel p{0.5, 0.5, 0.5};
    for (const auto& w : list) {
      const double v = std::cos(2 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
      for (int c = 0; c < 3; ++c) p[c] += 0.9 * w.amp[c] * v;
    }
    return p;
  };
}

}  // namespace

std::vector<ImageRecord> synthetic_corpus(std::size_t size) {
  using std::numbers::pi;
  std::vector<std::pair<std::string, Painter>> painters = {
      {"ramp_horizontal", [](double x, double) { return Pixel{x, 0.3 + 0.4 * x, 1.0 - x}; }},
      {"ramp_vertical", [](double, double y) { return Pixel{0.2 + 0.6 * y, y, 0.5}; }},
      {"checker_small",
       [](double x, double y) {
         const bool on = (static_cast<int>(x * 12) + static_cast<int>(y * 12)) % 2 == 0;
         return on ? Pixel{0.85, 0.8, 0.7} : Pixel{0.15, 0.2, 0.35};
       }},
      {"checker_large",
       [](double x, double y) {
         const bool on = (static_cast<int>(x * 4) + static_cast<int>(y * 4)) % 2 == 0;
         return on ? Pixel{0.7, 0.25, 0.2} : Pixel{0.25, 0.6, 0.75};
       }},
      {"rings",
       [](double x, double y) {
         const double r = std::hypot(x - 0.5, y - 0.5);
         const double v = 0.5 + 0.4 * std::cos(2 * pi * 6 * r);
         return Pixel{v, 0.5 * v + 0.25, 0.8 - 0.5 * v};
       }},
      {"texture_fine", smooth_field(11, 24, 9.0)},
      {"texture_coarse", smooth_field(23, 12, 3.0)},
      {"disks",
       [](double x, double y) {
         Pixel p{0.3 + 0.4 * y, 0.35, 0.45 + 0.2 * x};
         const double centers[3][2] = {{0.3, 0.3}, {0.7, 0.4}, {0.45, 0.75}};
         const Pixel colors[3] = {{0.9, 0.85, 0.2}, {0.1, 0.7, 0.3}, {0.85, 0.3, 0.6}};
         for (int i = 0; i < 3; ++i) {
           if (std::hypot(x - centers[i][0], y - centers[i][1]) < 0.17) p = colors[i];
         }
         return p;
       }},
      {"grating",
       [](double x, double y) {
         const double v = 0.5 + 0.35 * std::sin(2 * pi * (5 * x + 3 * y));
         return Pixel{v, v, 0.6 * v + 0.2};
       }},
      {"blobs",
       [](double x, double y) {
         const double b1 = std::exp(-(std::pow(x - 0.3, 2) + std::pow(y - 0.4, 2)) / 0.02);
         const double b2 = std::exp(-(std::pow(x - 0.7, 2) + std::pow(y - 0.6, 2)) / 0.05);
         const double b3 = std::exp(-(std::pow(x - 0.5, 2) + std::pow(y - 0.15, 2)) / 0.01);
         return Pixel{0.15 + 0.7 * b1 + 0.2 * b3, 0.2 + 0.5 * b2 + 0.3 * b1, 0.3 + 0.6 * b3 + 0.2 * b2};
       }},
      {"mondrian",
       [](double x, double y) {
         if (x < 0.35) return y < 0.6 ? Pixel{0.8, 0.15, 0.1} : Pixel{0.95, 0.9, 0.85};
         if (y < 0.3) return Pixel{0.1, 0.2, 0.7};
         if (x > 0.75) return Pixel{0.95, 0.8, 0.1};
         return Pixel{0.9, 0.9, 0.88};
       }},
      {"radial_soft",
       [](double x, double y) {
         const double r = std::hypot(x - 0.4, y - 0.55);
         const double edge = 1.0 / (1.0 + std::exp((r - 0.3) * 30.0));
         return Pixel{0.2 + 0.6 * edge, 0.25 + 0.4 * (1 - r), 0.7 - 0.4 * edge};
       }},
  };
  std::vector<ImageRecord> records;
  for (std::size_t i = 0; i < painters.size(); ++i) {
    const std::string prefix = (i < 10 ? "0" : "") + std::to_string(i) + "_";
    records.push_back({prefix + painters[i].first, paint(size, painters[i].second), {}});
  }
  return records;
}

}  // namespace hyperrestore
