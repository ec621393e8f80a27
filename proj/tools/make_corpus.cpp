// Writes the built-in synthetic test images as PNG files.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "hyperrestore/datasets.hpp"
#include "hyperrestore/image_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic corpus"};
  std::filesystem::path out = "data/corpus";
  std::size_t size = 96;
  app.add_option("--out", out);
  app.add_option("--size", size, "image side, a multiple of 8");
  CLI11_PARSE(app, argc, argv);
  try {
    std::filesystem::create_directories(out);
    for (const auto& record : hyperrestore::synthetic_corpus(size)) {
      hyperrestore::write_png(out / (record.id + ".png"), record.pixels);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
