// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0

#include "stereoaccel/ism.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "stereoaccel/synth.hpp"
#include "stereoaccel/tensor.hpp"

namespace stereoaccel::ism {
namespace {

Frame random_frame(std::size_t w, std::size_t h, std::mt19937& rng) {
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Frame f(w, h);
  for (auto& v : f.luma) v = dist(rng);
  return f;
}

// right(x + d, y) = left(x, y), with fresh texture entering on the left.
Frame shift_right(const Frame& left, long d, std::mt19937& rng) {
  Frame r = random_frame(left.width, left.height, rng);
  for (std::size_t y = 0; y < left.height; ++y)
    for (std::size_t x = 0; x + d < left.width; ++x) r.at(x + d, y) = left.at(x, y);
  return r;
}

TEST(TriangulateTest, BumblebeeValue) {
  const CameraRig rig{0.12, 0.0025, 7.4e-6};
  const double want = 0.12 * 0.0025 / (10.0 * 7.4e-6);
  EXPECT_NEAR(triangulate(10.0, rig), want, 1e-12);
  EXPECT_NEAR(triangulate(10.0, rig), 4.054, 1e-3);
}

TEST(TriangulateTest, InverseProportionality) {
  const CameraRig rig;
  EXPECT_DOUBLE_EQ(triangulate(20.0, rig) * 2.0, triangulate(10.0, rig));
  const double z = rig.baseline_m * rig.focal_m / rig.pixel_pitch_m;
  EXPECT_NEAR(triangulate(z, rig), 1.0, 1e-12);
  EXPECT_THROW(triangulate(0.0, rig), InputError);
  EXPECT_THROW(triangulate(-1.0, rig), InputError);
}

TEST(ReconstructTest, ZeroDisparityPairsEachPixelWithItself) {
  const DisparityMap m(5, 4, 0);
  const CorrespondenceSet cs = reconstruct(m);
  ASSERT_EQ(cs.size(), 20u);
  for (const auto& c : cs) {
    EXPECT_EQ(c.xl, c.xr);
    EXPECT_EQ(c.yl, c.yr);
  }
}

TEST(ReconstructTest, ConstantDisparityRespectsBounds) {
  const DisparityMap m(10, 3, 5);
  const CorrespondenceSet cs = reconstruct(m);
  EXPECT_EQ(cs.size(), 15u);
  EXPECT_EQ(cs.size(), m.valid_count());
  for (const auto& c : cs) {
    EXPECT_LE(c.xl, 4);
    EXPECT_EQ(c.xr - c.xl, 5);
    EXPECT_EQ(c.yr, c.yl);
  }
}

TEST(PropagateTest, ZeroMotionIsIdentity) {
  std::mt19937 rng(3);
  DisparityMap m(12, 7);
  for (auto& d : m.d) d = static_cast<std::int32_t>(rng() % 4);
  for (std::size_t y = 0; y < 7; ++y)
    for (std::size_t x = 0; x < 12; ++x)
      if (!m.valid(x, y)) m.at(x, y) = DisparityMap::kInvalid;
  const CorrespondenceSet cs = reconstruct(m);
  const MotionField zero(12, 7);
  const CorrespondenceSet out = propagate(cs, zero, zero);
  ASSERT_EQ(out.size(), cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(out[i].xl, cs[i].xl);
    EXPECT_EQ(out[i].xr, cs[i].xr);
    EXPECT_FALSE(out[i].stale);
  }
  EXPECT_EQ(to_disparity(out, 12, 7), m);
}

TEST(PropagateTest, FormulaSubstitution) {
  MotionField ml(20, 20), mr(20, 20);
  ml.at(10, 5) = {2.0f, 1.0f};
  mr.at(13, 5) = {-1.4f, 0.6f};
  const CorrespondenceSet out = propagate({{10, 5, 13, 5, false}}, ml, mr);
  EXPECT_EQ(out[0].xl, 12);
  EXPECT_EQ(out[0].yl, 6);
  EXPECT_EQ(out[0].xr, 12);
  EXPECT_EQ(out[0].yr, 6);
}

TEST(PropagateTest, CommonTranslationPreservesDisparity) {
  std::mt19937 rng(5);
  DisparityMap m(30, 10);
  for (auto& d : m.d) d = static_cast<std::int32_t>(rng() % 6);
  MotionField f(30, 10);
  for (auto& v : f.v) v = {3.0f, 0.0f};
  const CorrespondenceSet cs = reconstruct(m);
  for (const auto& c : propagate(cs, f, f)) {
    if (c.stale) continue;
    EXPECT_EQ(c.xr - c.xl, m.at(static_cast<std::size_t>(c.xl - 3), static_cast<std::size_t>(c.yl)));
  }
}

TEST(PropagateTest, LeavingTheFrameMarksStale) {
  MotionField f(8, 8);
  for (auto& v : f.v) v = {4.0f, 0.0f};
  const CorrespondenceSet out = propagate({{5, 2, 6, 2, false}}, f, f);
  EXPECT_TRUE(out[0].stale);
  EXPECT_EQ(out[0].xr, 7);
  EXPECT_EQ(to_disparity(out, 8, 8).valid_count(), 0u);
}

TEST(ToDisparityTest, NearerSurfaceWins) {
  const CorrespondenceSet cs{{3, 1, 5, 1, false}, {3, 1, 7, 1, false}, {3, 1, 4, 1, false}};
  EXPECT_EQ(to_disparity(cs, 10, 3).at(3, 1), 4);
}

TEST(GaussianBlurTest, ConstantFrameUnchanged) {
  const Frame f(9, 7, 0.25f);
  const Frame b = gaussian_blur(f, 1.2, 2);
  for (float v : b.luma) EXPECT_NEAR(v, 0.25f, 1e-6f);
}

TEST(GaussianBlurTest, ImpulseGivesKernelFootprint) {
  Frame f(11, 11);
  f.at(5, 5) = 1.0f;
  const auto k = gaussian_kernel(1.0, 2);
  const Frame b = gaussian_blur(f, 1.0, 2);
  for (std::size_t y = 0; y < 11; ++y)
    for (std::size_t x = 0; x < 11; ++x) {
      const long dx = static_cast<long>(x) - 5, dy = static_cast<long>(y) - 5;
      const float want = (std::abs(dx) <= 2 && std::abs(dy) <= 2) ? k[dx + 2] * k[dy + 2] : 0.0f;
      EXPECT_NEAR(b.at(x, y), want, 1e-7f);
    }
}

TEST(GaussianBlurTest, MatchesDenseConvolutionOfPaddedFrame) {
  std::mt19937 rng(7);
  const Frame f = random_frame(13, 9, rng);
  const std::size_t r = 2;
  const auto k1 = gaussian_kernel(1.3, r);
  Tensor padded({f.height + 2 * r, f.width + 2 * r});
  for (std::size_t y = 0; y < padded.dim(0); ++y)
    for (std::size_t x = 0; x < padded.dim(1); ++x)
      padded.at({y, x}) = f.clamped(static_cast<long>(x) - static_cast<long>(r), static_cast<long>(y) - static_cast<long>(r));
  Tensor k2({2 * r + 1, 2 * r + 1});
  for (std::size_t i = 0; i <= 2 * r; ++i)
    for (std::size_t j = 0; j <= 2 * r; ++j) k2.at({i, j}) = k1[i] * k1[j];
  const Tensor want = conv_valid(padded, k2);
  const Frame got = gaussian_blur(f, 1.3, r);
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) EXPECT_NEAR(got.at(x, y), want.at({y, x}), 1e-5f);
  EXPECT_THROW(gaussian_blur(f, 1.0, 0), InputError);
}

TEST(MotionTest, IdenticalFramesGiveZeroField) {
  std::mt19937 rng(11);
  const Frame f = random_frame(40, 30, rng);
  const MotionField m = estimate_motion(f, f);
  ASSERT_EQ(m.width, 40u);
  ASSERT_EQ(m.height, 30u);
  for (const auto& v : m.v) {
    EXPECT_EQ(v.dx, 0.0f);
    EXPECT_EQ(v.dy, 0.0f);
  }
}

TEST(MotionTest, RecoversWrappedTranslation) {
  synth::SceneParams sp;
  sp.width = 64;
  sp.height = 48;
  const Frame base = synth::make_sequence(sp).frames[0].left;
  Frame moved(base.width, base.height);
  for (std::size_t y = 0; y < base.height; ++y)
    for (std::size_t x = 0; x < base.width; ++x) moved.at((x + 2) % base.width, y) = base.at(x, y);
  const MotionField m = estimate_motion(base, moved);
  std::vector<float> dx, dy;
  for (std::size_t y = 8; y + 8 < base.height; ++y)
    for (std::size_t x = 8; x + 8 < base.width; ++x) {
      dx.push_back(m.at(x, y).dx);
      dy.push_back(m.at(x, y).dy);
    }
  std::nth_element(dx.begin(), dx.begin() + dx.size() / 2, dx.end());
  std::nth_element(dy.begin(), dy.begin() + dy.size() / 2, dy.end());
  EXPECT_NEAR(dx[dx.size() / 2], 2.0f, 0.5f);
  EXPECT_NEAR(dy[dy.size() / 2], 0.0f, 0.5f);
}

TEST(MotionTest, SizeMismatch) {
  EXPECT_THROW(estimate_motion(Frame(4, 4), Frame(5, 4)), InputError);
}

TEST(MotionTest, EstimatorIsPluggable) {
  struct Fixed : MotionEstimator {
    MotionField estimate(const Frame& a, const Frame&, OpCounter*) const override {
      MotionField m(a.width, a.height);
      for (auto& v : m.v) v = {1.0f, 0.0f};
      return m;
    }
  };
  synth::SceneParams sp;
  sp.frames = 2;
  sp.motion_x = 1;
  sp.motion_y = 0;
  sp.fg_width = 0;
  const auto seq = synth::make_sequence(sp);
  IsmParams p;
  const Fixed fixed;
  const auto r = ism_run(seq.frames, {{0, seq.ground_truth[0]}}, p, &fixed);
  EXPECT_EQ(r.ops[1].motion_sad, 0u);
  EXPECT_GT(three_pixel_error(r.disparity[1], seq.ground_truth[1]), 99.0);
}

TEST(RefineTest, ExactSeedIsKept) {
  std::mt19937 rng(13);
  const Frame left = random_frame(40, 20, rng);
  const Frame right = shift_right(left, 4, rng);
  const DisparityMap init(40, 20, 4);
  const DisparityMap out = refine(left, right, init);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x + 4 < 40; ++x) EXPECT_EQ(out.at(x, y), 4) << x << "," << y;
}

TEST(RefineTest, OffByOneSeedRecovers) {
  std::mt19937 rng(17);
  const Frame left = random_frame(40, 20, rng);
  const Frame right = shift_right(left, 4, rng);
  const DisparityMap out = refine(left, right, DisparityMap(40, 20, 5), {5, 1, 16});
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x + 6 < 40; ++x) EXPECT_EQ(out.at(x, y), 4) << x << "," << y;
}

TEST(RefineTest, UntexturedRegionKeepsSeed) {
  const Frame flat(30, 10, 0.5f);
  const DisparityMap out = refine(flat, flat, DisparityMap(30, 10, 3));
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x + 3 < 30; ++x) EXPECT_EQ(out.at(x, y), 3);
}

TEST(RefineTest, IdempotentAtTheOptimum) {
  std::mt19937 rng(19);
  const Frame left = random_frame(32, 16, rng);
  const Frame right = shift_right(left, 2, rng);
  const DisparityMap once = refine(left, right, DisparityMap(32, 16, 3));
  const DisparityMap twice = refine(left, right, once);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x + 4 < 32; ++x) EXPECT_EQ(twice.at(x, y), once.at(x, y));
}

TEST(RefineTest, RejectsBadParameters) {
  const Frame f(8, 8);
  EXPECT_THROW(refine(f, f, DisparityMap(8, 8, 0), {4, 1, 4}), InputError);
  EXPECT_THROW(refine(f, f, DisparityMap(8, 8, 0), {1, 1, 4}), InputError);
  EXPECT_THROW(refine(f, f, DisparityMap(8, 8, 0), {3, 0, 4}), InputError);
  EXPECT_THROW(refine(f, Frame(9, 8), DisparityMap(8, 8, 0)), InputError);
}

TEST(ThreePixelErrorTest, Basics) {
  DisparityMap gt(10, 2, 2);
  EXPECT_DOUBLE_EQ(three_pixel_error(gt, gt), 100.0);
  DisparityMap plus3 = gt;
  for (auto& d : plus3.d) d += 3;
  EXPECT_DOUBLE_EQ(three_pixel_error(plus3, gt), 0.0);
  DisparityMap half = gt;
  for (std::size_t x = 0; x < 10; ++x) half.at(x, 0) = 12;
  // gt valid where x + 2 < 10: 8 pixels per row; half's first row is
  // invalid or off by 10.
  EXPECT_DOUBLE_EQ(three_pixel_error(half, gt), 50.0);
  EXPECT_THROW(three_pixel_error(DisparityMap(3, 3), gt), InputError);
}

TEST(ThreePixelErrorTest, SymmetricForFullyValidMaps) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    DisparityMap a(16, 4), b(16, 4);
    for (auto& d : a.d) d = static_cast<std::int32_t>(rng() % 8);
    for (auto& d : b.d) d = static_cast<std::int32_t>(rng() % 8);
    // Keep every pixel valid.
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 8; x < 16; ++x) {
        a.at(x, y) = std::min<std::int32_t>(a.at(x, y), static_cast<std::int32_t>(15 - x));
        b.at(x, y) = std::min<std::int32_t>(b.at(x, y), static_cast<std::int32_t>(15 - x));
      }
    EXPECT_DOUBLE_EQ(three_pixel_error(a, b), three_pixel_error(b, a));
  }
}

TEST(IsmRunTest, KeyFramesFollowThePropagationWindow) {
  synth::SceneParams sp;
  sp.width = 32;
  sp.height = 24;
  sp.frames = 9;
  sp.fg_width = 0;
  const auto seq = synth::make_sequence(sp);
  IsmParams p;
  p.pw = 4;
  std::map<std::size_t, DisparityMap> keys{{0, seq.ground_truth[0]}, {4, seq.ground_truth[4]}, {8, seq.ground_truth[8]}};
  const auto r = ism_run(seq.frames, keys, p);
  const std::vector<bool> want{true, false, false, false, true, false, false, false, true};
  EXPECT_EQ(r.key, want);
  EXPECT_EQ(r.disparity[4], seq.ground_truth[4]);
  keys.erase(4);
  EXPECT_THROW(ism_run(seq.frames, keys, p), InputError);
  p.pw = 1;
  EXPECT_THROW(ism_run(seq.frames, keys, p), InputError);
}

TEST(IsmRunTest, StaticSceneReproducesKeyDisparity) {
  synth::SceneParams sp;
  sp.frames = 4;
  sp.motion_x = 0;
  sp.motion_y = 0;
  sp.fg_width = 0;
  const auto seq = synth::make_sequence(sp);
  IsmParams p;
  const auto r = ism_run(seq.frames, {{0, seq.ground_truth[0]}, {2, seq.ground_truth[2]}}, p);
  for (std::size_t t : {1u, 3u}) {
    const DisparityMap& gt = seq.ground_truth[t];
    for (std::size_t i = 0; i < gt.d.size(); ++i)
      if (gt.d[i] >= 0) {
        ASSERT_EQ(r.disparity[t].d[i], gt.d[i]) << "frame " << t << " pixel " << i;
      }
  }
}

TEST(IsmRunTest, OperationCountMatchesClosedForm) {
  synth::SceneParams sp;
  sp.width = 48;
  sp.height = 33;
  sp.frames = 2;
  const auto seq = synth::make_sequence(sp);
  IsmParams p;
  const auto r = ism_run(seq.frames, {{0, seq.ground_truth[0]}}, p);
  EXPECT_EQ(r.ops[0].total(), 0u);
  EXPECT_EQ(r.ops[1].total(), non_key_frame_ops(48, 33, p, r.ops[1].fallback_pixels));
}

TEST(IsmRunTest, QhdOperationCountWithinAnOrderOfMagnitude) {
  const std::uint64_t ops = non_key_frame_ops(960, 540, IsmParams{});
  EXPECT_GE(ops, 8'700'000u);
  EXPECT_LE(ops, 870'000'000u);
}

}  // namespace
}  // namespace stereoaccel::ism
