#include <gtest/gtest.h>

#include <random>

#include "checks.hpp"
#include "hyperrestore/hypernet.hpp"
#include "hyperrestore/model.hpp"
#include "hyperrestore/ops.hpp"
#include "hyperrestore/restoration_net.hpp"

using namespace hyperrestore;

namespace {

MetaBlock block(std::vector<float> w, std::vector<float> b, std::size_t slot = 0) {
  return {std::move(w), std::move(b), slot, {1, 1, 1}};
}

std::vector<float> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(GenerateKernel, ZeroLevelGivesOffsets) {
  std::mt19937_64 rng(1);
  const auto hnet = HyperNetwork::initialize(2, {2, 2, 3}, rng);
  const auto k = generate_network_weights(hnet, 0.0);
  for (std::size_t j = 0; j < k.size(); ++j) EXPECT_EQ(values(k[j]), hnet.blocks()[j].b);
}

TEST(GenerateKernel, UnitLevelZeroOffsetGivesSlopes) {
  MetaBlock b{{0.5f, -1.0f, 2.0f, 3.0f}, std::vector<float>(4, 0.0f), 0, {1, 1, 1}};
  b.kernel_shape = {4, 1, 1};
  EXPECT_EQ(values(generate_kernel(b, 1.0)), b.w);
}

TEST(GenerateKernel, HandWorkedExample) {
  MetaBlock b{{2, 4}, {1, 1}, 0, {2, 1, 1}};
  EXPECT_EQ(values(generate_kernel(b, 0.5)), (std::vector<float>{2, 3}));
}

TEST(GenerateKernel, RejectsNonFiniteLevel) {
  MetaBlock b{{2}, {1}, 0, {1, 1, 1}};
  EXPECT_THROW(generate_kernel(b, std::nan("")), ContractViolation);
}

TEST(GenerateKernel, GradientsAreLevelAndOne) {
  const Tensor w = Tensor::leaf({1, 1, 3, 3}, std::vector<float>(9, 0.3f));
  const Tensor b = Tensor::leaf({1, 1, 3, 3}, std::vector<float>(9, -0.1f));
  GradientTape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum(generate_kernel(w, b, 0.375)));
  }
  EXPECT_EQ(w.grad(), std::vector<float>(9, 0.375f));
  EXPECT_EQ(b.grad(), std::vector<float>(9, 1.0f));
}

TEST(HyperNetwork, ValidatesLengthsAndSlots) {
  EXPECT_THROW(HyperNetwork({block({1, 2}, {1})}), ContractViolation);
  EXPECT_THROW(HyperNetwork({block({1}, {1}, 0), block({1}, {1}, 0)}), ContractViolation);
}

TEST(HyperNetwork, SortsBySlot) {
  const HyperNetwork h({block({3}, {0}, 2), block({1}, {0}, 0), block({2}, {0}, 1)});
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(h.blocks()[j].target_slot, j);
    EXPECT_EQ(h.blocks()[j].w[0], static_cast<float>(j + 1));
  }
}

TEST(HyperNetwork, ZeroSlopeIsLevelIndependent) {
  HyperNetwork h({block({0}, {0.7f}, 0), block({0}, {-0.2f}, 1)});
  const auto a = generate_network_weights(h, -3.0), b = generate_network_weights(h, 5.0);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(values(a[j]), values(b[j]));
}

TEST(HyperNetwork, MidpointAffinity) {
  std::mt19937_64 rng(4);
  const auto h = HyperNetwork::initialize(6, {3, 3, 3}, rng);
  const auto k0 = generate_network_weights(h, 0), k1 = generate_network_weights(h, 1);
  const auto mid = generate_network_weights(h, 0.5);
  for (std::size_t j = 0; j < mid.size(); ++j)
    for (std::size_t i = 0; i < mid[j].numel(); ++i) {
      EXPECT_NEAR(mid[j].data()[i], 0.5 * (k0[j].data()[i] + k1[j].data()[i]), 1e-6);
    }
}

TEST(HyperNetwork, AffinitySuite) {
  const auto o = checks::kernel_affinity(8);
  EXPECT_TRUE(o.pass) << o.detail;
}

TEST(HyperNetwork, DifferenceIsSlopeTimesLevelGap) {
  std::mt19937_64 rng(6);
  const auto h = HyperNetwork::initialize(1, {2, 2, 3}, rng);
  const auto a = generate_network_weights(h, 0.9)[0], b = generate_network_weights(h, 0.2)[0];
  double ratio_spread = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_NEAR(a.data()[i] - b.data()[i], 0.7 * h.blocks()[0].w[i], 1e-6);
    ratio_spread = std::max(ratio_spread, static_cast<double>(std::abs(a.data()[i] / b.data()[i] - a.data()[0] / b.data()[0])));
  }
  EXPECT_GT(ratio_spread, 1e-3);  // not a scalar multiple of one another
}

TEST(HyperNetwork, InitializationRanges) {
  std::mt19937_64 rng(2);
  const auto h = HyperNetwork::initialize(4, {8, 8, 3}, rng);
  const double fan_in = 8 * 9;
  for (const auto& blk : h.blocks()) {
    for (float w : blk.w) EXPECT_LE(std::abs(w), 0.1 / std::sqrt(fan_in) + 1e-7);
    for (float b : blk.b) EXPECT_LE(std::abs(b), 1.0 / std::sqrt(fan_in) + 1e-7);
  }
}

TEST(HyperNetwork, DefaultFullConfigHasThirtyTwoKernels) {
  std::mt19937_64 rng(3);
  const auto arch = ArchConfig::full();
  const auto h = HyperNetwork::initialize(arch.num_generated_kernels(), arch.resblock_kernel_shape(), rng);
  EXPECT_EQ(generate_network_weights(h, 0.3).size(), 32u);
}

TEST(CountParameters, Examples) {
  EXPECT_EQ(count_parameters(HyperNetwork({{std::vector<float>(9), std::vector<float>(9), 0, {1, 1, 3}}})), 18u);
  std::mt19937_64 rng(1);
  EXPECT_EQ(count_parameters(HyperNetwork::initialize(32, {8, 8, 3}, rng)), 36864u);
}

TEST(CountParameters, IndependentOfServedLevels) {
  const auto o = checks::parameter_identity();
  EXPECT_TRUE(o.pass) << o.detail;
}
