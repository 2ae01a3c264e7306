// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0

#include "stereoaccel/deconv.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"

namespace stereoaccel {
namespace {

using testing::random_int_tensor;
using testing::random_shape;
using testing::random_tensor;

// a..i encoded as 1..9.
Tensor letters3x3() { return Tensor::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}); }

TEST(Decompose2dTest, ThreeByThreeMatchesWorkedExample) {
  const SubKernelSet set = decompose_2d(letters3x3());
  ASSERT_EQ(set.kernels.size(), 4u);
  EXPECT_EQ(set.kernels[0].tensor(), Tensor::from_rows({{1, 3}, {7, 9}}));  // a c / g i
  EXPECT_EQ(set.kernels[1].tensor(), Tensor::from_rows({{4, 6}}));          // d f
  EXPECT_EQ(set.kernels[2].tensor(), Tensor::from_rows({{2}, {8}}));        // b / h
  EXPECT_EQ(set.kernels[3].tensor(), Tensor::from_rows({{5}}));             // e
  EXPECT_EQ(set.kernels[0].extents, (Shape{2, 2}));
  EXPECT_EQ(set.kernels[1].extents, (Shape{1, 2}));
  EXPECT_EQ(set.kernels[2].extents, (Shape{2, 1}));
  EXPECT_EQ(set.kernels[3].extents, (Shape{1, 1}));
}

TEST(Decompose2dTest, OneByOneLeavesThreeEmptyPhases) {
  const SubKernelSet set = decompose_2d(Tensor({1, 1}, std::vector<float>{7.0f}));
  EXPECT_EQ(set.kernels[0].tensor(), Tensor({1, 1}, std::vector<float>{7.0f}));
  for (std::size_t k = 1; k < 4; ++k) EXPECT_TRUE(set.kernels[k].empty());
  EXPECT_EQ(set.non_empty_count(), 1u);
}

TEST(Decompose2dTest, FiveByFiveFollowsIndexFormula) {
  Tensor k({5, 5});
  for (std::size_t i = 0; i < 25; ++i) k.data()[i] = static_cast<float>(i);
  const SubKernelSet set = decompose_2d(k);
  const Shape want_extents[4] = {{3, 3}, {2, 3}, {3, 2}, {2, 2}};
  for (std::size_t p = 0; p < 4; ++p) {
    const SubKernel& s = set.kernels[p];
    ASSERT_EQ(s.extents, want_extents[p]);
    const std::size_t d0 = p & 1, d1 = (p >> 1) & 1;
    for (std::size_t i = 0; i < s.extents[0]; ++i)
      for (std::size_t j = 0; j < s.extents[1]; ++j)
        EXPECT_EQ(s.tensor().at({i, j}), static_cast<float>(5 * (2 * i + d0) + 2 * j + d1));
  }
}

TEST(Decompose2dTest, RejectsWrongRank) {
  EXPECT_THROW(decompose_2d(Tensor({3})), InputError);
  EXPECT_THROW(decompose_2d(Tensor({3, 3, 3})), InputError);
}

TEST(DecomposeNdTest, ThreeDimensionalKernelHasEightPhases) {
  std::mt19937 rng(1);
  const SubKernelSet set = decompose_nd(random_tensor({3, 3, 3}, rng));
  ASSERT_EQ(set.kernels.size(), 8u);
  std::size_t total = 0;
  for (const auto& s : set.kernels) total += s.elements();
  EXPECT_EQ(total, 27u);
}

TEST(DecomposeNdTest, DeltaBitsAreBinaryExpansionOfPhase) {
  EXPECT_EQ(phase_delta(5, 3), (std::vector<std::uint8_t>{1, 0, 1}));
  const SubKernelSet set = decompose_shape(Shape{3, 3, 3});
  EXPECT_EQ(set.kernels[5].delta, (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(DecomposeNdTest, RankOne) {
  const SubKernelSet set = decompose_nd(Tensor({3}, std::vector<float>{1, 2, 3}));
  ASSERT_EQ(set.kernels.size(), 2u);
  EXPECT_EQ(set.kernels[0].values, (std::vector<float>{1, 3}));
  EXPECT_EQ(set.kernels[1].values, (std::vector<float>{2}));
}

TEST(DecomposeNdTest, RejectsUnsupportedRank) {
  EXPECT_THROW(decompose_nd(Tensor({2, 2, 2, 2, 2})), InputError);
  EXPECT_NO_THROW(decompose_nd(Tensor({2, 2, 2, 2})));
}

TEST(DecomposeNdTest, AgreesWithDecompose2d) {
  std::mt19937 rng(2);
  const Tensor k = random_tensor({4, 5}, rng);
  const SubKernelSet a = decompose_2d(k), b = decompose_nd(k);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_EQ(a.kernels[p].values, b.kernels[p].values);
}

// Every kernel element lands in exactly one sub-kernel, for extents 1..7 and
// ranks 1..3.
TEST(DecomposeNdTest, PartitionsKernelElements) {
  std::mt19937 rng(3);
  for (std::size_t rank = 1; rank <= 3; ++rank) {
    for (int trial = 0; trial < 40; ++trial) {
      const Shape dims = random_shape(rank, 1, 7, rng);
      Tensor k(dims);
      for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] = static_cast<float>(i);
      const SubKernelSet set = decompose_nd(k);
      std::vector<float> all;
      for (const auto& s : set.kernels) {
        for (std::size_t j = 0; j < rank; ++j) {
          // ceil for even phase bit, floor for odd.
          const std::size_t want = s.delta[j] ? dims[j] / 2 : (dims[j] + 1) / 2;
          EXPECT_EQ(s.extents[j], want);
        }
        all.insert(all.end(), s.values.begin(), s.values.end());
      }
      std::sort(all.begin(), all.end());
      EXPECT_EQ(all, std::vector<float>(k.data().begin(), k.data().end()));
    }
  }
}

TEST(GatherTest, EvenEvenPhaseFillsWorkedPositions) {
  std::mt19937 rng(4);
  const Tensor in = random_int_tensor({3, 3}, rng);
  const TransformedResult r = transformed_deconv_detailed(in, letters3x3(), true);
  const Tensor s0 = conv_valid(in, Tensor::from_rows({{1, 3}, {7, 9}}));
  // 1-indexed (2,2),(2,4),(4,2),(4,4) are 0-indexed (1,1),(1,3),(3,1),(3,3).
  EXPECT_EQ(r.ofmap.at({1, 1}), s0.at({0, 0}));
  EXPECT_EQ(r.ofmap.at({1, 3}), s0.at({0, 1}));
  EXPECT_EQ(r.ofmap.at({3, 1}), s0.at({1, 0}));
  EXPECT_EQ(r.ofmap.at({3, 3}), s0.at({1, 1}));
  // (1,1) needs only e.
  EXPECT_EQ(r.ofmap.at({0, 0}), 5.0f * in.at({0, 0}));
}

TEST(GatherTest, SingleNonEmptyPhaseIsIdentity) {
  std::mt19937 rng(5);
  const Tensor k({1, 1}, std::vector<float>{1.0f});
  const SubKernelSet set = decompose_2d(k);
  const Tensor sub = random_tensor({4, 3}, rng);
  // Unbordered 1x1: ofmap equals the upsampled ifmap, phase 0 covers even positions.
  std::vector<std::optional<Tensor>> subs(4);
  subs[0] = sub;
  const Tensor out = gather(subs, set, {7, 5}, false);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(out.at({2 * y, 2 * x}), sub.at({y, x}));
}

TEST(GatherTest, RejectsMismatchedCoverage) {
  const SubKernelSet set = decompose_2d(letters3x3());
  std::vector<std::optional<Tensor>> subs(4);
  subs[0] = Tensor({2, 2});
  subs[1] = Tensor({3, 2});
  subs[2] = Tensor({2, 3});
  subs[3] = Tensor({3, 3});
  EXPECT_NO_THROW(gather(subs, set, {5, 5}, true));
  EXPECT_THROW(gather(subs, set, {6, 5}, true), InputError);
  subs[3].reset();
  EXPECT_THROW(gather(subs, set, {5, 5}, true), InputError);
  EXPECT_THROW(gather({}, set, {5, 5}, true), InputError);
}

TEST(TransformedDeconvTest, RandomFourByFourKernelMatchesReference) {
  std::mt19937 rng(6);
  const Tensor in = random_tensor({6, 6}, rng), k = random_tensor({4, 4}, rng);
  for (bool border : {true, false}) {
    EXPECT_LE(max_abs_diff(transformed_deconv(in, k, border), deconv_reference(in, k, 2, border)),
              1e-5f);
  }
}

TEST(TransformedDeconvTest, IntegerInputsAreBitIdentical) {
  std::mt19937 rng(7);
  const Tensor in = random_int_tensor({3, 3}, rng), k = random_int_tensor({3, 3}, rng);
  EXPECT_EQ(transformed_deconv(in, k, true), deconv_reference(in, k, 2, true));
}

TEST(TransformedDeconvTest, ZeroKernelGivesZeroOfmap) {
  std::mt19937 rng(8);
  const Tensor out = transformed_deconv(random_tensor({4, 4}, rng), Tensor({3, 3}), true);
  for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(TransformedDeconvTest, SinglePixelIfmap) {
  const Tensor out = transformed_deconv(Tensor({1, 1}, std::vector<float>{2.0f}), letters3x3(), true);
  EXPECT_EQ(out, Tensor({1, 1}, std::vector<float>{10.0f}));
}

// Exhaustive grid: ifmap extents 1..4, kernel extents 1..4, rank 2, both
// border conventions, integer data so equality is exact; also checks the
// multiply count against the reference's structural-zero accounting.
TEST(TransformedDeconvTest, ExhaustiveSmallGrid) {
  std::mt19937 rng(9);
  for (bool border : {true, false})
    for (std::size_t ih = 1; ih <= 4; ++ih)
      for (std::size_t iw = 1; iw <= 4; ++iw)
        for (std::size_t kh = 1; kh <= 4; ++kh)
          for (std::size_t kw = 1; kw <= 4; ++kw) {
            if (kh > upsampled_extent(ih, 2, border) || kw > upsampled_extent(iw, 2, border)) continue;
            const Tensor in = random_int_tensor({ih, iw}, rng), k = random_int_tensor({kh, kw}, rng);
            const TransformedResult r = transformed_deconv_detailed(in, k, border);
            ASSERT_EQ(r.ofmap, deconv_reference(in, k, 2, border))
                << ih << "x" << iw << " * " << kh << "x" << kw << " border=" << border;
            const MacCount macs = count_deconv_macs(in.dims(), k.dims(), 2, border);
            EXPECT_EQ(r.multiplies, macs.total - macs.structural_zero);
          }
}

TEST(TransformedDeconvTest, RandomRankThree) {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Shape in_dims = random_shape(3, 1, 5, rng);
    Shape k_dims = random_shape(3, 1, 4, rng);
    for (std::size_t d = 0; d < 3; ++d) k_dims[d] = std::min(k_dims[d], 2 * in_dims[d] + 1);
    const Tensor in = random_tensor(in_dims, rng), k = random_tensor(k_dims, rng);
    EXPECT_LE(max_abs_diff(transformed_deconv(in, k), deconv_reference(in, k, 2)), 1e-4f);
  }
}

TEST(TransformedDeconvTest, KernelLargerThanUpsampledIfmapFails) {
  EXPECT_THROW(transformed_deconv(Tensor({1, 1}), Tensor({4, 1}), true), InputError);
  EXPECT_THROW(transformed_deconv(Tensor({2, 2}), Tensor({2}), true), InputError);
}

}  // namespace
}  // namespace stereoaccel
