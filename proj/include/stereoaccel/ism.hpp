// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Invariant-based stereo matching. Key frames carry an externally supplied
// disparity map; every other frame reuses the previous frame's
// correspondences, moved by dense motion estimates on each view and then
// corrected by a short 1-D block-matching search.
//
// Disparity convention: the right-view match of left pixel (x, y) is
// (x + d, y).

#ifndef STEREOACCEL_ISM_HPP_
#define STEREOACCEL_ISM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stereoaccel/error.hpp"

namespace stereoaccel::ism {

struct Frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> luma;

  Frame() = default;
  Frame(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), luma(w * h, fill) {
    if (w == 0 || h == 0) throw InputError("frame extents must be positive");
  }

  float at(std::size_t x, std::size_t y) const { return luma[y * width + x]; }
  float& at(std::size_t x, std::size_t y) { return luma[y * width + x]; }
  // Coordinates clamped to the frame.
  float clamped(long x, long y) const {
    x = std::clamp<long>(x, 0, static_cast<long>(width) - 1);
    y = std::clamp<long>(y, 0, static_cast<long>(height) - 1);
    return luma[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
  }
  bool same_size(const Frame& o) const { return width == o.width && height == o.height; }
};

struct DisparityMap {
  static constexpr std::int32_t kInvalid = -1;

  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::int32_t> d;

  DisparityMap() = default;
  DisparityMap(std::size_t w, std::size_t h, std::int32_t fill = kInvalid) : width(w), height(h), d(w * h, fill) {
    if (w == 0 || h == 0) throw InputError("disparity map extents must be positive");
  }

  std::int32_t at(std::size_t x, std::size_t y) const { return d[y * width + x]; }
  std::int32_t& at(std::size_t x, std::size_t y) { return d[y * width + x]; }
  bool valid(std::size_t x, std::size_t y) const {
    const std::int32_t v = at(x, y);
    return v >= 0 && x + static_cast<std::size_t>(v) < width;
  }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) n += valid(x, y);
    return n;
  }
  bool operator==(const DisparityMap&) const = default;
};

struct MotionVector {
  float dx = 0.0f;
  float dy = 0.0f;
};

// Displacement of each pixel of the earlier frame into the later one.
struct MotionField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<MotionVector> v;

  MotionField() = default;
  MotionField(std::size_t w, std::size_t h) : width(w), height(h), v(w * h) {}

  const MotionVector& at(std::size_t x, std::size_t y) const { return v[y * width + x]; }
  MotionVector& at(std::size_t x, std::size_t y) { return v[y * width + x]; }
};

struct Correspondence {
  long xl = 0, yl = 0;
  long xr = 0, yr = 0;
  bool stale = false;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct CameraRig {
  double baseline_m = 0.12;
  double focal_m = 0.0025;
  double pixel_pitch_m = 7.4e-6;
};

// Counts pixel-level arithmetic: one per filter tap and one per
// absolute-difference accumulate.
struct OpCounter {
  std::uint64_t blur = 0;
  std::uint64_t motion_sad = 0;
  std::uint64_t refine_sad = 0;
  std::uint64_t fallback_pixels = 0;

  std::uint64_t total() const { return blur + motion_sad + refine_sad; }
};

inline double triangulate(double disparity_px, const CameraRig& rig) {
  if (!(disparity_px > 0.0)) throw InputError("disparity must be positive to triangulate");
  if (!(rig.baseline_m > 0.0) || !(rig.focal_m > 0.0) || !(rig.pixel_pitch_m > 0.0))
    throw InputError("camera rig parameters must be positive");
  return rig.baseline_m * rig.focal_m / (disparity_px * rig.pixel_pitch_m);
}

inline CorrespondenceSet reconstruct(const DisparityMap& dmap) {
  CorrespondenceSet cs;
  for (std::size_t y = 0; y < dmap.height; ++y)
    for (std::size_t x = 0; x < dmap.width; ++x) {
      if (!dmap.valid(x, y)) continue;
      const long xl = static_cast<long>(x), yl = static_cast<long>(y);
      cs.push_back({xl, yl, xl + dmap.at(x, y), yl, false});
    }
  return cs;
}

// Moves each side by its own motion vector, rounded to the nearest pixel.
// Pairs leaving the frame are clipped and marked stale.
inline CorrespondenceSet propagate(const CorrespondenceSet& cs, const MotionField& left,
                                   const MotionField& right) {
  if (left.width != right.width || left.height != right.height)
    throw InputError("left and right motion fields differ in size");
  const long w = static_cast<long>(left.width), h = static_cast<long>(left.height);
  CorrespondenceSet out;
  out.reserve(cs.size());
  for (const Correspondence& c : cs) {
    Correspondence n = c;
    if (c.xl < 0 || c.xl >= w || c.yl < 0 || c.yl >= h || c.xr < 0 || c.xr >= w || c.yr < 0 || c.yr >= h) {
      n.stale = true;
      out.push_back(n);
      continue;
    }
    const MotionVector& ml = left.at(static_cast<std::size_t>(c.xl), static_cast<std::size_t>(c.yl));
    const MotionVector& mr = right.at(static_cast<std::size_t>(c.xr), static_cast<std::size_t>(c.yr));
    n.xl = c.xl + std::lround(ml.dx);
    n.yl = c.yl + std::lround(ml.dy);
    n.xr = c.xr + std::lround(mr.dx);
    n.yr = c.yr + std::lround(mr.dy);
    if (n.xl < 0 || n.xl >= w || n.yl < 0 || n.yl >= h || n.xr < 0 || n.xr >= w || n.yr < 0 || n.yr >= h) {
      n.stale = true;
      n.xl = std::clamp(n.xl, 0L, w - 1);
      n.yl = std::clamp(n.yl, 0L, h - 1);
      n.xr = std::clamp(n.xr, 0L, w - 1);
      n.yr = std::clamp(n.yr, 0L, h - 1);
    }
    out.push_back(n);
  }
  return out;
}

// Disparity seeds at the propagated left positions. Where several pairs land
// on one pixel the larger disparity (nearer surface) wins.
inline DisparityMap to_disparity(const CorrespondenceSet& cs, std::size_t width, std::size_t height) {
  DisparityMap m(width, height);
  for (const Correspondence& c : cs) {
    if (c.stale) continue;
    const long d = c.xr - c.xl;
    if (d < 0 || c.xl + d >= static_cast<long>(width)) continue;
    auto& slot = m.at(static_cast<std::size_t>(c.xl), static_cast<std::size_t>(c.yl));
    slot = std::max<std::int32_t>(slot, static_cast<std::int32_t>(d));
  }
  return m;
}

inline std::vector<float> gaussian_kernel(double sigma, std::size_t radius) {
  if (radius == 0) throw InputError("blur radius must be at least 1");
  if (!(sigma > 0.0)) throw InputError("blur sigma must be positive");
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double t = static_cast<double>(i) - static_cast<double>(radius);
    const double v = std::exp(-t * t / (2.0 * sigma * sigma));
    k[i] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Separable Gaussian with edge clamping.
inline Frame gaussian_blur(const Frame& f, double sigma, std::size_t radius, OpCounter* ops = nullptr) {
  const std::vector<float> k = gaussian_kernel(sigma, radius);
  const long r = static_cast<long>(radius);
  Frame tmp(f.width, f.height), out(f.width, f.height);
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) {
      float acc = 0.0f;
      for (long i = -r; i <= r; ++i) acc += k[i + r] * f.clamped(static_cast<long>(x) + i, static_cast<long>(y));
      tmp.at(x, y) = acc;
    }
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x) {
      float acc = 0.0f;
      for (long i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(static_cast<long>(x), static_cast<long>(y) + i);
      out.at(x, y) = acc;
    }
  if (ops) ops->blur += 2 * f.width * f.height * k.size();
  return out;
}

namespace detail {

// Start of a `block`-wide window centred on `p` and shifted so that both the
// window and its copy displaced by `shift` lie inside [0, extent) when they
// can.
inline long window_start(long p, long shift, long block, long extent) {
  long s = p - block / 2;
  if (s + block + std::max(shift, 0L) > extent) s = extent - block - std::max(shift, 0L);
  if (s + std::min(shift, 0L) < 0) s = -std::min(shift, 0L);
  return s;
}

// SAD between the window of `a` around (x, y) and the window of `b`
// displaced by (dx, dy).
inline float patch_sad(const Frame& a, const Frame& b, long x, long y, long dx, long dy, long block) {
  const long xs = window_start(x, dx, block, static_cast<long>(a.width));
  const long ys = window_start(y, dy, block, static_cast<long>(a.height));
  float acc = 0.0f;
  for (long j = 0; j < block; ++j)
    for (long i = 0; i < block; ++i)
      acc += std::fabs(a.clamped(xs + i, ys + j) - b.clamped(xs + i + dx, ys + j + dy));
  return acc;
}

inline Frame downsample(const Frame& f) {
  Frame out((f.width + 1) / 2, (f.height + 1) / 2);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) out.at(x, y) = f.at(2 * x, 2 * y);
  return out;
}

}  // namespace detail

struct MotionParams {
  std::size_t levels = 3;
  std::size_t block = 3;
  std::size_t search = 1;  // per-level search radius around the prediction
  double sigma = 1.0;
  std::size_t blur_radius = 2;
  long max_motion = 32;

  void validate() const {
    if (levels == 0) throw InputError("motion: pyramid needs at least one level");
    if (block == 0 || block % 2 == 0) throw InputError("motion: block must be odd");
    if (search == 0) throw InputError("motion: search radius must be at least 1");
    if (max_motion < 1) throw InputError("motion: max_motion must be positive");
  }
};

class MotionEstimator {
 public:
  virtual ~MotionEstimator() = default;
  virtual MotionField estimate(const Frame& prev, const Frame& cur, OpCounter* ops) const = 0;
};

// Coarse-to-fine block matching on a Gaussian pyramid. Each level searches a
// small square window around the doubled estimate of the level above.
class PyramidBlockMotion : public MotionEstimator {
 public:
  explicit PyramidBlockMotion(MotionParams p = {}) : p_(p) { p_.validate(); }

  const MotionParams& params() const { return p_; }

  MotionField estimate(const Frame& prev, const Frame& cur, OpCounter* ops) const override {
    if (!prev.same_size(cur)) throw InputError("motion: frames differ in size");
    std::vector<Frame> pa{gaussian_blur(prev, p_.sigma, p_.blur_radius, ops)};
    std::vector<Frame> pb{gaussian_blur(cur, p_.sigma, p_.blur_radius, ops)};
    for (std::size_t l = 1; l < p_.levels; ++l) {
      pa.push_back(detail::downsample(gaussian_blur(pa.back(), p_.sigma, p_.blur_radius, ops)));
      pb.push_back(detail::downsample(gaussian_blur(pb.back(), p_.sigma, p_.blur_radius, ops)));
    }
    MotionField field;
    for (std::size_t l = p_.levels; l-- > 0;) {
      const Frame& a = pa[l];
      const Frame& b = pb[l];
      MotionField next(a.width, a.height);
      const long s = static_cast<long>(p_.search);
      const long block = static_cast<long>(p_.block);
      const long limit = std::max(1L, p_.max_motion >> l);
      for (std::size_t y = 0; y < a.height; ++y)
        for (std::size_t x = 0; x < a.width; ++x) {
          long px = 0, py = 0;
          if (!field.v.empty()) {
            const MotionVector& c = field.at(std::min(x / 2, field.width - 1), std::min(y / 2, field.height - 1));
            px = 2 * std::lround(c.dx);
            py = 2 * std::lround(c.dy);
          }
          float best = std::numeric_limits<float>::infinity();
          long bx = px, by = py, bdist = std::numeric_limits<long>::max();
          for (long v = -s; v <= s; ++v)
            for (long u = -s; u <= s; ++u) {
              const long cx = px + u, cy = py + v;
              const float c = detail::patch_sad(a, b, static_cast<long>(x), static_cast<long>(y), cx, cy, block);
              // Ties: nearest the prediction, then nearest zero motion.
              const long dist = std::abs(u) + std::abs(v);
              const long mag = std::abs(cx) + std::abs(cy);
              const long best_mag = std::abs(bx) + std::abs(by);
              if (c < best || (c == best && (dist < bdist || (dist == bdist && mag < best_mag)))) {
                best = c;
                bx = cx;
                by = cy;
                bdist = dist;
              }
            }
          if (ops) ops->motion_sad += static_cast<std::uint64_t>((2 * s + 1) * (2 * s + 1) * block * block);
          next.at(x, y) = {static_cast<float>(std::clamp(bx, -limit, limit)),
                           static_cast<float>(std::clamp(by, -limit, limit))};
        }
      field = std::move(next);
    }
    return field;
  }

 private:
  MotionParams p_;
};

inline MotionField estimate_motion(const Frame& prev, const Frame& cur, const MotionParams& params = {},
                                   OpCounter* ops = nullptr) {
  return PyramidBlockMotion(params).estimate(prev, cur, ops);
}

struct RefineParams {
  std::size_t block = 5;
  std::size_t radius = 2;
  // Search radius around zero for pixels without a propagated seed.
  std::size_t fallback_radius = 16;

  void validate() const {
    if (block < 3 || block % 2 == 0) throw InputError("refine: block must be odd and at least 3");
    if (radius == 0) throw InputError("refine: radius must be at least 1");
    if (fallback_radius < radius) throw InputError("refine: fallback radius must be at least the radius");
  }
};

// 1-D SAD search in the right view around each seed. The whole window is
// evaluated; only offsets that keep the match inside the frame can win.
inline DisparityMap refine(const Frame& left, const Frame& right, const DisparityMap& init,
                           const RefineParams& p = {}, OpCounter* ops = nullptr) {
  p.validate();
  if (!left.same_size(right)) throw InputError("refine: left and right frames differ in size");
  if (init.width != left.width || init.height != left.height)
    throw InputError("refine: seed disparity map does not match the frames");
  const long w = static_cast<long>(left.width);
  const long block = static_cast<long>(p.block);
  DisparityMap out(left.width, left.height);
  for (std::size_t y = 0; y < left.height; ++y)
    for (std::size_t x = 0; x < left.width; ++x) {
      const bool seeded = init.valid(x, y);
      if (!seeded && ops) ++ops->fallback_pixels;
      const long centre = seeded ? init.at(x, y) : 0;
      const long r = static_cast<long>(seeded ? p.radius : p.fallback_radius);
      float best = std::numeric_limits<float>::infinity();
      long best_d = DisparityMap::kInvalid, best_dist = 0;
      for (long d = centre - r; d <= centre + r; ++d) {
        const float c = detail::patch_sad(left, right, static_cast<long>(x), static_cast<long>(y), d, 0, block);
        if (d < 0 || static_cast<long>(x) + d >= w) continue;
        const long dist = std::abs(d - centre);
        if (c < best || (c == best && dist < best_dist)) {
          best = c;
          best_d = d;
          best_dist = dist;
        }
      }
      if (ops) ops->refine_sad += static_cast<std::uint64_t>((2 * r + 1) * block * block);
      out.at(x, y) = static_cast<std::int32_t>(best_d);
    }
  return out;
}

// Percentage of valid ground-truth pixels whose prediction is off by less
// than three pixels. Invalid predictions count as errors.
inline double three_pixel_error(const DisparityMap& pred, const DisparityMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw InputError("three-pixel error: disparity maps differ in size");
  std::size_t total = 0, good = 0;
  for (std::size_t y = 0; y < gt.height; ++y)
    for (std::size_t x = 0; x < gt.width; ++x) {
      if (!gt.valid(x, y)) continue;
      ++total;
      if (pred.valid(x, y) && std::abs(pred.at(x, y) - gt.at(x, y)) < 3) ++good;
    }
  if (total == 0) throw InputError("three-pixel error: ground truth has no valid pixels");
  return 100.0 * static_cast<double>(good) / static_cast<double>(total);
}

struct StereoPair {
  Frame left;
  Frame right;
};

struct IsmParams {
  std::size_t pw = 2;
  MotionParams motion;
  RefineParams refine;

  void validate() const {
    if (pw < 2) throw InputError("propagation window must be at least 2");
    motion.validate();
    refine.validate();
  }
};

inline bool is_key_frame(std::size_t index, std::size_t pw) { return index % pw == 0; }

struct IsmResult {
  std::vector<DisparityMap> disparity;
  std::vector<bool> key;
  std::vector<OpCounter> ops;  // per frame, zero for key frames
};

// Key frames emit their supplied disparity; each other frame propagates the
// previous output through the motion of both views and refines it.
inline IsmResult ism_run(const std::vector<StereoPair>& frames, const std::map<std::size_t, DisparityMap>& key_disp,
                         const IsmParams& params, const MotionEstimator* estimator = nullptr) {
  params.validate();
  PyramidBlockMotion fallback(params.motion);
  const MotionEstimator& motion = estimator ? *estimator : fallback;
  IsmResult res;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const StereoPair& f = frames[t];
    if (!f.left.same_size(f.right)) throw InputError("frame " + std::to_string(t) + ": views differ in size");
    if (t > 0 && !f.left.same_size(frames[0].left))
      throw InputError("frame " + std::to_string(t) + ": size differs from frame 0");
    OpCounter ops;
    if (is_key_frame(t, params.pw)) {
      auto it = key_disp.find(t);
      if (it == key_disp.end()) throw InputError("missing key-frame disparity for frame " + std::to_string(t));
      if (it->second.width != f.left.width || it->second.height != f.left.height)
        throw InputError("key-frame disparity for frame " + std::to_string(t) + " does not match the frame size");
      res.disparity.push_back(it->second);
      res.key.push_back(true);
    } else {
      const StereoPair& prev = frames[t - 1];
      const CorrespondenceSet cs = reconstruct(res.disparity.back());
      const MotionField ml = motion.estimate(prev.left, f.left, &ops);
      const MotionField mr = motion.estimate(prev.right, f.right, &ops);
      const DisparityMap seed = to_disparity(propagate(cs, ml, mr), f.left.width, f.left.height);
      res.disparity.push_back(refine(f.left, f.right, seed, params.refine, &ops));
      res.key.push_back(false);
    }
    res.ops.push_back(ops);
  }
  return res;
}

// Closed-form operation count of one non-key frame: two motion estimates
// plus refinement, with `fallback_pixels` searched at the wider radius.
inline std::uint64_t non_key_frame_ops(std::size_t width, std::size_t height, const IsmParams& p,
                                       std::uint64_t fallback_pixels = 0) {
  const std::uint64_t taps = 2 * p.motion.blur_radius + 1;
  const std::uint64_t cand = (2 * p.motion.search + 1) * (2 * p.motion.search + 1);
  const std::uint64_t mblock = p.motion.block * p.motion.block;
  // Per view: both frames blurred at full size for level 0 and again at the
  // size of level l before downsampling to level l + 1; two passes each.
  std::uint64_t per_view = 2 * 2 * taps * width * height;
  std::size_t w = width, h = height;
  for (std::size_t l = 0; l < p.motion.levels; ++l) {
    per_view += cand * mblock * w * h;
    if (l + 1 < p.motion.levels) per_view += 2 * 2 * taps * w * h;
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  const std::uint64_t rblock = p.refine.block * p.refine.block;
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
  return 2 * per_view + (pixels - fallback_pixels) * (2 * p.refine.radius + 1) * rblock +
         fallback_pixels * (2 * p.refine.fallback_radius + 1) * rblock;
}

}  // namespace stereoaccel::ism

#endif  // STEREOACCEL_ISM_HPP_
