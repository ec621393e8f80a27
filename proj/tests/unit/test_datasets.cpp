#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hyperrestore/datasets.hpp"
#include "hyperrestore/image_io.hpp"

using namespace hyperrestore;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("hr_datasets_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(++counter));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Tensor byte_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> v(3 * h * w);
  for (auto& x : v) x = static_cast<float>(rng() % 256) / 255.0f;
  return Tensor::from({3, h, w}, v);
}

std::vector<float> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Corpus, MissingDirectoryNamesPath) {
  try {
    load_corpus("/nonexistent/hr_corpus");
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/hr_corpus"), std::string::npos);
  }
}

TEST(Corpus, EmptyDirectoryNamesPath) {
  TempDir dir;
  std::ofstream(dir.path() / "notes.txt") << "not an image";
  try {
    load_corpus(dir.path());
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find(dir.path().string()), std::string::npos);
  }
}

TEST(Corpus, CropsToMultipleOfEightAndSkipsBadFiles) {
  TempDir dir;
  write_png(dir.path() / "b_odd.png", byte_image(17, 23, 1));
  write_png(dir.path() / "c_tiny.png", byte_image(8, 8, 2));
  std::ofstream(dir.path() / "d_broken.png") << "garbage";
  write_ppm(dir.path() / "a_ppm.ppm", byte_image(16, 16, 3));

  const auto corpus = load_corpus(dir.path());
  ASSERT_EQ(corpus.records.size(), 2u);
  EXPECT_EQ(corpus.records[0].id, "a_ppm");
  EXPECT_EQ(corpus.records[1].id, "b_odd");
  EXPECT_EQ(corpus.records[1].pixels.shape(), (Shape{3, 16, 16}));
  EXPECT_EQ(corpus.warnings.size(), 2u);

  // 17x23 -> rows 0..15, columns 3..18
  const Tensor full = read_png(dir.path() / "b_odd.png");
  EXPECT_EQ(values(corpus.records[1].pixels), values(center_crop(full, 16, 16)));
  EXPECT_EQ(corpus.records[1].pixels.data()[0], full.data()[3]);
}

TEST(Corpus, LoadingTwiceIsIdentical) {
  TempDir dir;
  write_png(dir.path() / "x.png", byte_image(24, 32, 4));
  const auto a = load_corpus(dir.path()), b = load_corpus(dir.path());
  EXPECT_EQ(values(a.records[0].pixels), values(b.records[0].pixels));
}

TEST(ImageIo, PngRoundTripIsValueExact) {
  TempDir dir;
  const Tensor img = byte_image(9, 13, 5);
  write_png(dir.path() / "x.png", img);
  EXPECT_EQ(values(read_png(dir.path() / "x.png")), values(img));
  const auto bytes = encode_png(img);
  EXPECT_EQ(values(decode_png(bytes)), values(img));
}

TEST(ImageIo, WhiteIsExactlyOne) {
  TempDir dir;
  write_png(dir.path() / "w.png", Tensor::full({3, 4, 4}, 1.0f));
  const Tensor white = read_png(dir.path() / "w.png");
  for (float v : white.data()) EXPECT_EQ(v, 1.0f);
}

TEST(ImageIo, PpmRoundTrip) {
  TempDir dir;
  const Tensor img = byte_image(7, 5, 6);
  write_ppm(dir.path() / "x.ppm", img);
  EXPECT_EQ(values(read_image(dir.path() / "x.ppm")), values(img));
}

TEST(ImageIo, RejectsGarbage) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4};
  EXPECT_THROW(decode_png(junk), ImageIoError);
  EXPECT_THROW(read_image("/nonexistent/x.png"), ImageIoError);
}

TEST(ImageIo, ByteQuantization) {
  EXPECT_EQ(to_byte(0.0f), 0);
  EXPECT_EQ(to_byte(1.0f), 255);
  EXPECT_EQ(to_byte(-0.5f), 0);
  EXPECT_EQ(to_byte(2.0f), 255);
  EXPECT_EQ(to_byte(128.0f / 255.0f), 128);
}

TEST(Patches, SeededAndShaped) {
  const auto corpus = synthetic_corpus(32);
  PatchSource a(corpus, 16, 9), b(corpus, 16, 9), c(corpus, 16, 10);
  const auto pa = a.sample(6), pb = b.sample(6), pc = c.sample(6);
  ASSERT_EQ(pa.size(), 6u);
  bool any_differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].shape(), (Shape{3, 16, 16}));
    EXPECT_EQ(values(pa[i]), values(pb[i]));
    any_differs = any_differs || values(pa[i]) != values(pc[i]);
  }
  EXPECT_TRUE(any_differs);
  EXPECT_TRUE(a.sample(0).empty());
}

TEST(Patches, TooLargeRejected) {
  EXPECT_THROW(PatchSource(synthetic_corpus(32), 40, 1), ContractViolation);
  EXPECT_THROW(PatchSource({}, 8, 1), DatasetError);
}

TEST(Patches, FlipIsInvolution) {
  const Tensor img = byte_image(4, 6, 7);
  EXPECT_EQ(values(flip_horizontal(flip_horizontal(img))), values(img));
  EXPECT_EQ(flip_horizontal(img).data()[0], img.data()[5]);
}

TEST(Split, EveryStrideThIsValidation) {
  const auto corpus = synthetic_corpus(16);
  const auto split = split_corpus(corpus, 4);
  ASSERT_EQ(split.validation.size(), 3u);
  EXPECT_EQ(split.train.size(), 9u);
  EXPECT_EQ(split.validation[0].id, corpus[3].id);
  EXPECT_EQ(split.validation[2].id, corpus[11].id);
  EXPECT_THROW(split_corpus(corpus, 1), ContractViolation);
}

TEST(SyntheticCorpus, TwelveDeterministicImages) {
  const auto a = synthetic_corpus(24), b = synthetic_corpus(24);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(values(a[i].pixels), values(b[i].pixels));
    for (float v : a[i].pixels.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}
