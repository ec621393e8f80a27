#include "hyperrestore/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace hyperrestore {

namespace {

Tensor planar_from_interleaved(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w) {
  Tensor t = Tensor::zeros({3, h, w});
  auto dst = t.mutable_data();
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) dst[c * plane + i] = rgb[3 * i + c] / 255.0f;
  return t;
}

std::vector<std::uint8_t> interleaved_from_planar(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ContractViolation("image writers expect 3xHxW, got " + shape_to_string(image.shape()));
  }
  const std::size_t plane = image.dim(1) * image.dim(2);
  auto src = image.data();
  std::vector<std::uint8_t> rgb(3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) rgb[3 * i + c] = to_byte(src[c * plane + i]);
  return rgb;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

}  // namespace

std::uint8_t to_byte(float value) {
  const float v = std::clamp(value, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

Tensor decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("invalid PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw ImageIoError("invalid PNG: " + message);
  }
  return planar_from_interleaved(rgb, image.height, image.width);
}

std::vector<std::uint8_t> encode_png(const Tensor& image) {
  const auto rgb = interleaved_from_planar(image);
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.dim(2));
  desc.height = static_cast<png_uint_32>(image.dim(1));
  desc.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw ImageIoError(std::string("PNG encode failed: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw ImageIoError(std::string("PNG encode failed: ") + desc.message);
  }
  out.resize(size);
  return out;
}

Tensor read_png(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("write failed for " + path.string());
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  auto next_token = [&in]() {
    std::string token;
    while (token.empty()) {
      int ch = in.get();
      if (ch == EOF) break;
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(ch)) continue;
      token.push_back(static_cast<char>(ch));
      while ((ch = in.peek()) != EOF && !std::isspace(ch)) token.push_back(static_cast<char>(in.get()));
    }
    return token;
  };
  if (next_token() != "P6") throw ImageIoError(path.string() + ": not a binary PPM (P6)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::exception&) {
    throw ImageIoError(path.string() + ": malformed PPM header");
  }
  if (maxval != 255 || w == 0 || h == 0) throw ImageIoError(path.string() + ": only 8-bit PPM is supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> rgb(3 * w * h);
  in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(rgb.size())) throw ImageIoError(path.string() + ": truncated PPM");
  return planar_from_interleaved(rgb, h, w);
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  const auto rgb = interleaved_from_planar(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out << "P6\n" << image.dim(2) << ' ' << image.dim(1) << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

Tensor read_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw ImageIoError(path.string() + ": unsupported image format (expected .png or .ppm)");
}

void write_image(const std::filesystem::path& path, const Tensor& image) {
  if (lower_extension(path) == ".ppm") {
    write_ppm(path, image);
  } else {
    write_png(path, image);
  }
}

}  // namespace hyperrestore
