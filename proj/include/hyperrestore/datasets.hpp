#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImageRecord {
  std::string id;
  Tensor pixels;  // 3 x H x W, H and W multiples of 8, both >= 16
  std::filesystem::path source;
};

struct Corpus {
  std::vector<ImageRecord> records;
  std::vector<std::string> warnings;  // one per skipped file
};

/// Loads every .png / .ppm in `directory` in lexicographic filename order.
/// Unreadable or too-small files are skipped with a warning; an empty result throws.
Corpus load_corpus(const std::filesystem::path& directory);

/// Center crop so that H and W become multiples of `multiple`.
Tensor center_crop_to_multiple(const Tensor& image, std::size_t multiple = 8);
Tensor center_crop(const Tensor& image, std::size_t height, std::size_t width);
Tensor flip_horizontal(const Tensor& image);

/// Every `stride`-th record (offset stride - 1) goes to validation.
struct CorpusSplit {
  std::vector<ImageRecord> train;
  std::vector<ImageRecord> validation;
};
CorpusSplit split_corpus(const std::vector<ImageRecord>& records, std::size_t stride);

/// Seeded stream of random square crops.
class PatchSource {
 public:
  PatchSource(std::vector<ImageRecord> records, std::size_t patch_size, std::uint64_t seed,
              bool horizontal_flips = true);

  std::size_t patch_size() const { return patch_size_; }
  const std::vector<ImageRecord>& records() const { return records_; }

  std::vector<Tensor> sample(std::size_t n);

 private:
  std::vector<ImageRecord> records_;
  std::size_t patch_size_;
  bool flips_;
  std::mt19937_64 rng_;
};

std::vector<Tensor> sample_patches(PatchSource& source, std::size_t n);

/// Twelve deterministic test images (ramps, checkerboards, filtered noise, blobs, ...).
std::vector<ImageRecord> synthetic_corpus(std::size_t size = 96);

}  // namespace hyperrestore
