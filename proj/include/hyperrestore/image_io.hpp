#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit RGB decode to a 3xHxW tensor in [0, 1]; alpha is dropped, gray is expanded.
Tensor decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Tensor& image);

Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Binary PPM (P6, maxval 255).
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& image);

/// Dispatches on extension: .png, .ppm.
Tensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor& image);

/// Nearest 8-bit code for a [0, 1] value.
std::uint8_t to_byte(float value);

}  // namespace hyperrestore
