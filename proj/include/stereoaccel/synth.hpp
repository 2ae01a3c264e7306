// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic stereo sequences with exact ground-truth disparity: a textured
// background plane and a textured rectangular foreground plane, both
// translating uniformly from frame to frame.

#ifndef STEREOACCEL_SYNTH_HPP_
#define STEREOACCEL_SYNTH_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "stereoaccel/error.hpp"
#include "stereoaccel/ism.hpp"

namespace stereoaccel::synth {

struct SceneParams {
  std::size_t width = 96;
  std::size_t height = 64;
  std::size_t frames = 4;
  std::int32_t background_disparity = 3;
  std::int32_t foreground_disparity = 9;
  // Foreground rectangle in scene coordinates; zero extents disable it.
  long fg_x = 28, fg_y = 18;
  std::size_t fg_width = 32, fg_height = 24;
  long motion_x = 2, motion_y = 1;  // pixels per frame
  std::uint64_t seed = 1;

  void validate() const {
    if (width == 0 || height == 0 || frames == 0) throw InputError("synth: extents and frame count must be positive");
    if (background_disparity < 0 || foreground_disparity < 0) throw InputError("synth: disparities must be >= 0");
  }
};

struct Sequence {
  std::vector<ism::StereoPair> frames;
  std::vector<ism::DisparityMap> ground_truth;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline float lattice(long x, long y, std::uint64_t seed) {
  const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(x) * 0x632be59bd9b4e019ULL ^
                                         mix(static_cast<std::uint64_t>(y))));
  return static_cast<float>(h >> 40) / static_cast<float>(1ULL << 24);
}

// Fine noise on a coarse bilinear base, in [0, 1].
inline float texture(long x, long y, std::uint64_t seed) {
  constexpr long kCell = 6;
  const long cx = x >= 0 ? x / kCell : (x - kCell + 1) / kCell;
  const long cy = y >= 0 ? y / kCell : (y - kCell + 1) / kCell;
  const float fx = static_cast<float>(x - cx * kCell) / kCell;
  const float fy = static_cast<float>(y - cy * kCell) / kCell;
  const std::uint64_t s = seed * 2 + 1;
  const float base = (1 - fx) * (1 - fy) * lattice(cx, cy, s) + fx * (1 - fy) * lattice(cx + 1, cy, s) +
                     (1 - fx) * fy * lattice(cx, cy + 1, s) + fx * fy * lattice(cx + 1, cy + 1, s);
  return 0.6f * base + 0.4f * lattice(x, y, seed * 2);
}

}  // namespace detail

inline Sequence make_sequence(const SceneParams& p) {
  p.validate();
  Sequence seq;
  const bool has_fg = p.fg_width > 0 && p.fg_height > 0;
  auto in_fg = [&](long sx, long sy) {
    return has_fg && sx >= p.fg_x && sx < p.fg_x + static_cast<long>(p.fg_width) && sy >= p.fg_y &&
           sy < p.fg_y + static_cast<long>(p.fg_height);
  };
  const std::uint64_t bg_seed = p.seed * 7 + 1, fg_seed = p.seed * 7 + 2;
  for (std::size_t t = 0; t < p.frames; ++t) {
    const long ox = p.motion_x * static_cast<long>(t), oy = p.motion_y * static_cast<long>(t);
    ism::StereoPair pair{ism::Frame(p.width, p.height), ism::Frame(p.width, p.height)};
    ism::DisparityMap gt(p.width, p.height);
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x) {
        const long sx = static_cast<long>(x) - ox, sy = static_cast<long>(y) - oy;
        const bool fg = in_fg(sx, sy);
        pair.left.at(x, y) = detail::texture(sx, sy, fg ? fg_seed : bg_seed);
        const std::int32_t d = fg ? p.foreground_disparity : p.background_disparity;
        if (x + static_cast<std::size_t>(d) < p.width) gt.at(x, y) = d;
        // Right view: the nearest surface whose left-view point lands here.
        const long fx = sx - p.foreground_disparity;
        if (in_fg(fx, sy)) {
          pair.right.at(x, y) = detail::texture(fx, sy, fg_seed);
        } else {
          pair.right.at(x, y) = detail::texture(sx - p.background_disparity, sy, bg_seed);
        }
      }
    seq.frames.push_back(std::move(pair));
    seq.ground_truth.push_back(std::move(gt));
  }
  return seq;
}

}  // namespace stereoaccel::synth

#endif  // STEREOACCEL_SYNTH_HPP_
