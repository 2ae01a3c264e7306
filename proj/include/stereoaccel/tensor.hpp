// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense N-D float tensor plus the reference operations every other module is
// checked against: valid convolution (dot product or SAD), zero-insertion
// upsampling, naive deconvolution, and structural-zero MAC accounting.

#ifndef STEREOACCEL_TENSOR_HPP_
#define STEREOACCEL_TENSOR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stereoaccel/error.hpp"

namespace stereoaccel {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(std::span<const std::size_t> dims) {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  return os.str();
}

// Row-major strides for `dims`.
inline Shape row_major_strides(std::span<const std::size_t> dims) {
  Shape strides(dims.size(), 1);
  for (std::size_t d = dims.size(); d-- > 1;) strides[d - 1] = strides[d] * dims[d];
  return strides;
}

// Advances a multi-index odometer over `dims`. Returns false after the last
// index has been visited.
inline bool next_index(std::span<std::size_t> idx, std::span<const std::size_t> dims) {
  for (std::size_t d = idx.size(); d-- > 0;) {
    if (++idx[d] < dims[d]) return true;
    idx[d] = 0;
  }
  return false;
}

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape dims, float fill = 0.0f) : dims_(std::move(dims)) {
    validate_dims();
    data_.assign(element_count(dims_), fill);
    strides_ = row_major_strides(dims_);
  }

  Tensor(Shape dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
    validate_dims();
    if (data_.size() != element_count(dims_)) {
      throw InputError("tensor buffer holds " + std::to_string(data_.size()) +
                       " elements, shape " + shape_string(dims_) + " needs " +
                       std::to_string(element_count(dims_)));
    }
    strides_ = row_major_strides(dims_);
  }

  // 2-D convenience constructor from nested rows.
  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows) {
    const std::size_t h = rows.size();
    const std::size_t w = h ? rows.begin()->size() : 0;
    std::vector<float> data;
    data.reserve(h * w);
    for (const auto& r : rows) {
      if (r.size() != w) throw InputError("ragged rows");
      data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({h, w}, std::move(data));
  }

  std::size_t rank() const noexcept { return dims_.size(); }
  const Shape& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t d) const { return dims_.at(d); }
  std::size_t size() const noexcept { return data_.size(); }
  const Shape& strides() const noexcept { return strides_; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  std::size_t offset(std::span<const std::size_t> idx) const {
    std::size_t off = 0;
    for (std::size_t d = 0; d < idx.size(); ++d) off += idx[d] * strides_[d];
    return off;
  }

  float& at(std::span<const std::size_t> idx) { return data_[offset(idx)]; }
  float at(std::span<const std::size_t> idx) const { return data_[offset(idx)]; }
  float& at(std::initializer_list<std::size_t> idx) {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
  }
  float at(std::initializer_list<std::size_t> idx) const {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  void validate_dims() const {
    if (dims_.empty()) throw InputError("tensor rank must be at least 1");
    for (std::size_t e : dims_) {
      if (e == 0) throw InputError("tensor extent must be positive, got " + shape_string(dims_));
    }
  }

  Shape dims_;
  Shape strides_;
  std::vector<float> data_;
};

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) {
    throw InputError("shape mismatch " + shape_string(a.dims()) + " vs " + shape_string(b.dims()));
  }
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

enum class ConvMode { kDot, kSad };

// Valid (unpadded, stride 1) correlation of `ifmap` with `kernel`. kDot
// accumulates products, kSad accumulates absolute differences.
inline Tensor conv_valid(const Tensor& ifmap, const Tensor& kernel, ConvMode mode = ConvMode::kDot) {
  if (ifmap.rank() != kernel.rank()) {
    throw InputError("conv rank mismatch: ifmap " + shape_string(ifmap.dims()) + ", kernel " +
                     shape_string(kernel.dims()));
  }
  const std::size_t rank = ifmap.rank();
  Shape out_dims(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    if (kernel.dim(d) > ifmap.dim(d)) {
      throw InputError("kernel " + shape_string(kernel.dims()) + " larger than ifmap " +
                       shape_string(ifmap.dims()));
    }
    out_dims[d] = ifmap.dim(d) - kernel.dim(d) + 1;
  }

  // Flat ifmap offsets of every kernel tap relative to the window origin.
  std::vector<std::size_t> taps;
  taps.reserve(kernel.size());
  Shape k_idx(rank, 0);
  do {
    taps.push_back(ifmap.offset(k_idx));
  } while (next_index(k_idx, kernel.dims()));

  Tensor out(out_dims);
  const auto in = ifmap.data();
  const auto kv = kernel.data();
  auto ov = out.data();
  Shape o_idx(rank, 0);
  std::size_t o = 0;
  do {
    const std::size_t base = ifmap.offset(o_idx);
    float acc = 0.0f;
    if (mode == ConvMode::kDot) {
      for (std::size_t t = 0; t < taps.size(); ++t) acc += in[base + taps[t]] * kv[t];
    } else {
      for (std::size_t t = 0; t < taps.size(); ++t) acc += std::fabs(in[base + taps[t]] - kv[t]);
    }
    ov[o++] = acc;
  } while (next_index(o_idx, out_dims));
  return out;
}

// Extent after inserting factor-1 zeros between neighbours. The bordered form
// also pads one zero on each side, so 3 -> 7 for factor 2.
inline std::size_t upsampled_extent(std::size_t n, std::size_t factor, bool with_border) {
  return factor * (n - 1) + 1 + (with_border ? 2 : 0);
}

// Position of original element i inside the upsampled axis.
inline std::size_t upsampled_position(std::size_t i, std::size_t factor, bool with_border) {
  return with_border ? factor * i + 1 : factor * i;
}

inline Tensor upsample_zero(const Tensor& ifmap, std::size_t factor, bool with_border = true) {
  if (factor == 0) throw InputError("upsampling factor must be at least 1");
  if (factor == 1 && !with_border) return ifmap;
  Shape dims(ifmap.rank());
  for (std::size_t d = 0; d < ifmap.rank(); ++d)
    dims[d] = upsampled_extent(ifmap.dim(d), factor, with_border);
  Tensor out(dims);
  Shape idx(ifmap.rank(), 0), pos(ifmap.rank());
  std::size_t i = 0;
  do {
    for (std::size_t d = 0; d < idx.size(); ++d) pos[d] = upsampled_position(idx[d], factor, with_border);
    out.at(pos) = ifmap.data()[i++];
  } while (next_index(idx, ifmap.dims()));
  return out;
}

// Naive deconvolution: upsample with zeros, then dense valid convolution.
inline Tensor deconv_reference(const Tensor& ifmap, const Tensor& kernel, std::size_t factor,
                               bool with_border = true) {
  return conv_valid(upsample_zero(ifmap, factor, with_border), kernel, ConvMode::kDot);
}

struct MacCount {
  std::uint64_t total = 0;
  std::uint64_t structural_zero = 0;

  double redundant_fraction() const {
    return total == 0 ? 0.0 : static_cast<double>(structural_zero) / static_cast<double>(total);
  }
};

// Counts MACs of the naive upsampled convolution by visiting every window and
// tap and testing whether the ifmap operand is an inserted zero.
inline MacCount count_deconv_macs(std::span<const std::size_t> ifmap_dims,
                                  std::span<const std::size_t> kernel_dims, std::size_t factor,
                                  bool with_border = true) {
  if (ifmap_dims.size() != kernel_dims.size()) throw InputError("rank mismatch");
  if (factor == 0) throw InputError("upsampling factor must be at least 1");
  const std::size_t rank = ifmap_dims.size();
  Shape up(rank), out(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    if (ifmap_dims[d] == 0 || kernel_dims[d] == 0) throw InputError("extents must be positive");
    up[d] = upsampled_extent(ifmap_dims[d], factor, with_border);
    if (kernel_dims[d] > up[d]) throw InputError("kernel larger than upsampled ifmap");
    out[d] = up[d] - kernel_dims[d] + 1;
  }
  // Per axis, mark which upsampled positions carry an original element.
  std::vector<std::vector<bool>> live(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    live[d].assign(up[d], false);
    for (std::size_t i = 0; i < ifmap_dims[d]; ++i) live[d][upsampled_position(i, factor, with_border)] = true;
  }
  MacCount count;
  Shape o(rank, 0);
  do {
    Shape k(rank, 0);
    do {
      bool nonzero = true;
      for (std::size_t d = 0; d < rank && nonzero; ++d) nonzero = live[d][o[d] + k[d]];
      ++count.total;
      if (!nonzero) ++count.structural_zero;
    } while (next_index(k, kernel_dims));
  } while (next_index(o, out));
  return count;
}

// Fraction of naive-deconvolution MACs whose ifmap operand is an inserted zero.
inline double redundant_mac_fraction(std::span<const std::size_t> ifmap_dims,
                                     std::span<const std::size_t> kernel_dims, std::size_t factor,
                                     bool with_border = true) {
  return count_deconv_macs(ifmap_dims, kernel_dims, factor, with_border).redundant_fraction();
}

// Fraction of the upsampled ifmap that is inserted zeros.
inline double upsampled_zero_fraction(std::span<const std::size_t> ifmap_dims, std::size_t factor,
                                      bool with_border = true) {
  double live = 1.0, all = 1.0;
  for (std::size_t n : ifmap_dims) {
    live *= static_cast<double>(n);
    all *= static_cast<double>(upsampled_extent(n, factor, with_border));
  }
  return 1.0 - live / all;
}

}  // namespace stereoaccel

#endif  // STEREOACCEL_TENSOR_HPP_
