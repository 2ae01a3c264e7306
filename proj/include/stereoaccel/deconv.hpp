// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rewrites a factor-2 deconvolution as 2^N dense sub-convolutions over the
// original ifmap, one per output parity class, followed by a gather that
// interleaves the sub-ofmaps.
//
// Phase k selects kernel parity bits delta_j = (k >> j) & 1, where dimension 0
// is the outermost tensor dimension. Sub-kernel k holds
//   S_k(i_0, ..., i_{N-1}) = K(2 i_0 + delta_0, ..., 2 i_{N-1} + delta_{N-1})
// and has extent ceil((|K_j| - delta_j) / 2) along dimension j.
//
// On a bordered upsampled ifmap, sub-kernel k produces the ofmap positions
// whose coordinate j has parity 1 - delta_j; without the border the parity is
// delta_j. In both cases sub-ofmap element t lands at ofmap coordinate
// 2 t + (border XOR delta_j).

#ifndef STEREOACCEL_DECONV_HPP_
#define STEREOACCEL_DECONV_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stereoaccel/error.hpp"
#include "stereoaccel/tensor.hpp"

namespace stereoaccel {

inline constexpr std::size_t kDeconvFactor = 2;
inline constexpr std::size_t kMaxDecomposeRank = 4;

struct SubKernel {
  std::size_t phase = 0;
  std::vector<std::uint8_t> delta;
  Shape extents;
  // Row-major over `extents`; empty for shape-only sets and empty sub-kernels.
  std::vector<float> values;

  std::size_t elements() const { return element_count(extents); }
  bool empty() const { return elements() == 0; }
  Tensor tensor() const {
    if (empty()) throw InputError("sub-kernel " + std::to_string(phase) + " is empty");
    return Tensor(extents, values);
  }
};

struct SubKernelSet {
  Shape source_dims;
  std::vector<SubKernel> kernels;

  std::size_t rank() const { return source_dims.size(); }
  std::size_t non_empty_count() const {
    std::size_t n = 0;
    for (const auto& s : kernels) n += s.empty() ? 0 : 1;
    return n;
  }
};

inline std::vector<std::uint8_t> phase_delta(std::size_t phase, std::size_t rank) {
  std::vector<std::uint8_t> delta(rank);
  for (std::size_t j = 0; j < rank; ++j) delta[j] = static_cast<std::uint8_t>((phase >> j) & 1U);
  return delta;
}

inline std::size_t subkernel_extent(std::size_t kernel_extent, std::uint8_t delta) {
  return kernel_extent < delta ? 0 : (kernel_extent - delta + 1) / 2;
}

namespace detail {

inline void check_decompose_rank(std::size_t rank) {
  if (rank < 1 || rank > kMaxDecomposeRank) {
    throw InputError("deconvolution kernels of rank " + std::to_string(rank) +
                     " are unsupported (1 to 4)");
  }
}

inline SubKernelSet decompose(std::span<const std::size_t> dims, const Tensor* kernel) {
  const std::size_t rank = dims.size();
  check_decompose_rank(rank);
  SubKernelSet set;
  set.source_dims.assign(dims.begin(), dims.end());
  const std::size_t phases = std::size_t{1} << rank;
  set.kernels.reserve(phases);
  for (std::size_t k = 0; k < phases; ++k) {
    SubKernel s;
    s.phase = k;
    s.delta = phase_delta(k, rank);
    s.extents.resize(rank);
    for (std::size_t j = 0; j < rank; ++j) s.extents[j] = subkernel_extent(dims[j], s.delta[j]);
    if (kernel != nullptr && !s.empty()) {
      s.values.reserve(s.elements());
      Shape idx(rank, 0), src(rank);
      do {
        for (std::size_t j = 0; j < rank; ++j) src[j] = 2 * idx[j] + s.delta[j];
        s.values.push_back(kernel->at(src));
      } while (next_index(idx, s.extents));
    }
    set.kernels.push_back(std::move(s));
  }
  return set;
}

}  // namespace detail

// Sub-kernel extents only; used by the performance model, which never needs
// weight values.
inline SubKernelSet decompose_shape(std::span<const std::size_t> kernel_dims) {
  for (std::size_t e : kernel_dims)
    if (e == 0) throw InputError("kernel extents must be positive");
  return detail::decompose(kernel_dims, nullptr);
}

inline SubKernelSet decompose_nd(const Tensor& kernel) {
  return detail::decompose(kernel.dims(), &kernel);
}

// 2-D entry point. Phase order is S0 = even/even, S1 = odd rows, S2 = odd
// columns, S3 = odd/odd, identical to decompose_nd on a rank-2 kernel.
inline SubKernelSet decompose_2d(const Tensor& kernel) {
  if (kernel.rank() != 2) {
    throw InputError("decompose_2d needs a rank-2 kernel, got " + shape_string(kernel.dims()));
  }
  return decompose_nd(kernel);
}

// Where one sub-convolution lands along one axis of the ofmap.
struct PhaseAxis {
  std::size_t ofmap_first = 0;  // first ofmap coordinate of this parity class
  std::size_t count = 0;        // ofmap coordinates in the class
  std::size_t ifmap_first = 0;  // first ifmap row the sub-convolution reads
};

inline std::size_t deconv_out_extent(std::size_t ifmap_extent, std::size_t kernel_extent,
                                     bool with_border) {
  const std::size_t up = upsampled_extent(ifmap_extent, kDeconvFactor, with_border);
  if (kernel_extent > up) {
    throw InputError("kernel extent " + std::to_string(kernel_extent) +
                     " exceeds upsampled ifmap extent " + std::to_string(up));
  }
  return up - kernel_extent + 1;
}

inline PhaseAxis phase_axis(std::size_t out_extent, std::uint8_t delta, bool with_border) {
  PhaseAxis a;
  a.ofmap_first = static_cast<std::size_t>(with_border) ^ delta;
  a.count = out_extent > a.ofmap_first ? (out_extent - a.ofmap_first + 1) / 2 : 0;
  a.ifmap_first = with_border ? 0 : delta;
  return a;
}

inline Shape deconv_out_dims(std::span<const std::size_t> ifmap_dims,
                             std::span<const std::size_t> kernel_dims, bool with_border) {
  if (ifmap_dims.size() != kernel_dims.size()) throw InputError("rank mismatch");
  Shape out(ifmap_dims.size());
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = deconv_out_extent(ifmap_dims[d], kernel_dims[d], with_border);
  return out;
}

// Extents of the sub-ofmap that phase `s` contributes, or nullopt when the
// sub-kernel is empty or its parity class has no ofmap positions.
inline std::optional<Shape> sub_ofmap_dims(const SubKernel& s, std::span<const std::size_t> out_dims,
                                           bool with_border) {
  if (s.empty()) return std::nullopt;
  Shape dims(out_dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    dims[d] = phase_axis(out_dims[d], s.delta[d], with_border).count;
    if (dims[d] == 0) return std::nullopt;
  }
  return dims;
}

// Interleaves per-phase sub-ofmaps (indexed by phase, nullopt where a phase
// contributes nothing) into an ofmap of `out_dims`. Positions not covered by
// any phase stay zero.
inline Tensor gather(const std::vector<std::optional<Tensor>>& sub_ofmaps, const SubKernelSet& set,
                     const Shape& out_dims, bool with_border = true) {
  if (sub_ofmaps.size() != set.kernels.size()) {
    throw InputError("gather expects one slot per phase: " + std::to_string(set.kernels.size()) +
                     ", got " + std::to_string(sub_ofmaps.size()));
  }
  if (out_dims.size() != set.rank()) throw InputError("gather rank mismatch");
  Tensor out(out_dims);
  const std::size_t rank = out_dims.size();
  for (const SubKernel& s : set.kernels) {
    const auto& sub = sub_ofmaps[s.phase];
    const auto expected = sub_ofmap_dims(s, out_dims, with_border);
    if (!expected) {
      if (sub) {
        throw InputError("phase " + std::to_string(s.phase) +
                         " covers no ofmap positions but a sub-ofmap was supplied");
      }
      continue;
    }
    if (!sub) throw InputError("missing sub-ofmap for phase " + std::to_string(s.phase));
    if (sub->dims() != *expected) {
      throw InputError("phase " + std::to_string(s.phase) + " sub-ofmap is " +
                       shape_string(sub->dims()) + ", interleave needs " + shape_string(*expected));
    }
    Shape first(rank);
    for (std::size_t d = 0; d < rank; ++d) first[d] = phase_axis(out_dims[d], s.delta[d], with_border).ofmap_first;
    Shape t(rank, 0), p(rank);
    std::size_t i = 0;
    do {
      for (std::size_t d = 0; d < rank; ++d) p[d] = 2 * t[d] + first[d];
      out.at(p) = sub->data()[i++];
    } while (next_index(t, sub->dims()));
  }
  return out;
}

struct TransformedResult {
  Tensor ofmap;
  std::vector<std::optional<Tensor>> sub_ofmaps;
  std::uint64_t multiplies = 0;
};

namespace detail {

inline Tensor slice(const Tensor& t, std::span<const std::size_t> first, const Shape& extents) {
  Tensor out(extents);
  Shape idx(extents.size(), 0), src(extents.size());
  std::size_t i = 0;
  do {
    for (std::size_t d = 0; d < idx.size(); ++d) src[d] = first[d] + idx[d];
    out.data()[i++] = t.at(src);
  } while (next_index(idx, extents));
  return out;
}

}  // namespace detail

// Runs every non-empty sub-convolution on the slice of the ifmap its parity
// class needs and gathers the result. Only ofmap positions are computed, so
// `multiplies` equals the naive MAC count minus its structural-zero MACs.
inline TransformedResult transformed_deconv_detailed(const Tensor& ifmap, const Tensor& kernel,
                                                     bool with_border = true) {
  if (ifmap.rank() != kernel.rank()) throw InputError("rank mismatch between ifmap and kernel");
  const SubKernelSet set = decompose_nd(kernel);
  const Shape out_dims = deconv_out_dims(ifmap.dims(), kernel.dims(), with_border);
  const std::size_t rank = ifmap.rank();

  TransformedResult r;
  r.sub_ofmaps.resize(set.kernels.size());
  for (const SubKernel& s : set.kernels) {
    const auto sub_dims = sub_ofmap_dims(s, out_dims, with_border);
    if (!sub_dims) continue;
    Shape first(rank), window(rank);
    for (std::size_t d = 0; d < rank; ++d) {
      first[d] = phase_axis(out_dims[d], s.delta[d], with_border).ifmap_first;
      window[d] = (*sub_dims)[d] + s.extents[d] - 1;
      if (first[d] + window[d] > ifmap.dim(d)) {
        throw InvariantError("phase " + std::to_string(s.phase) + " reads past the ifmap");
      }
    }
    r.sub_ofmaps[s.phase] = conv_valid(detail::slice(ifmap, first, window), s.tensor(), ConvMode::kDot);
    r.multiplies += static_cast<std::uint64_t>(element_count(*sub_dims)) * s.elements();
  }
  r.ofmap = gather(r.sub_ofmaps, set, out_dims, with_border);
  return r;
}

inline Tensor transformed_deconv(const Tensor& ifmap, const Tensor& kernel, bool with_border = true) {
  return transformed_deconv_detailed(ifmap, kernel, with_border).ofmap;
}

}  // namespace stereoaccel

#endif  // STEREOACCEL_DECONV_HPP_
