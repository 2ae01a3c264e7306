// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytical latency and DRAM-traffic model of a double-buffered systolic
// array running one layer as a sequence of rounds. Each round holds one ifmap
// tile and C_k filters of every (sub-)kernel k in the on-chip buffer:
//
//   l_c = sum_k ceil(|S_k| * I * C_k * |tile| / A)        (sub-kernels serialize)
//   l_m = ceil((dIF + sum_k dOF_k) / B)         beta = 1, weights resident
//       = ceil(sum_k (dW_k + dOF_k) / B)        beta = 0, ifmap resident
//   l   = max(l_c, l_m),   L = sum over rounds of l
//
// with dIF = |tile| * I, dW_k = |S_k| * C_k and dOF_k = ceil(|tile| * C_k / s^2).
// Every round must satisfy dIF + sum_k (dOF_k + dW_k) <= usable buffer, and for
// every ifmap position and every non-empty k the rounds covering it must hold
// exactly `out_channels` filters of k in total.
//
// Quantities are element and cycle counts. Extents are outermost-first, so a
// 2-D tile is {H, W} and a 3-D tile {D, H, W}.

#ifndef STEREOACCEL_PERFMODEL_HPP_
#define STEREOACCEL_PERFMODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stereoaccel/deconv.hpp"
#include "stereoaccel/error.hpp"
#include "stereoaccel/tensor.hpp"

namespace stereoaccel {

struct HardwareConfig {
  std::uint64_t pe_rows = 24;
  std::uint64_t pe_cols = 24;
  // Physical buffer size in elements.
  std::uint64_t buffer_capacity = 768 * 1024;
  // Elements per cycle; +inf models a compute-bound machine.
  double bandwidth = 16.0;
  // When set, only half the buffer holds the working set of a round.
  bool double_buffered = true;
  // dW_k = |S_k| * C_k as published; set to also multiply by input channels.
  bool weights_include_input_channels = false;
  // Reporting only: converts DRAM element counts to bytes.
  double bytes_per_element = 2.0;

  std::uint64_t pe_count() const { return pe_rows * pe_cols; }
  std::uint64_t usable_buffer() const { return double_buffered ? buffer_capacity / 2 : buffer_capacity; }

  void validate() const {
    if (pe_rows == 0 || pe_cols == 0) throw InputError("hardware: PE array extents must be positive");
    if (buffer_capacity == 0 || usable_buffer() == 0) throw InputError("hardware: buffer capacity must be positive");
    if (!(bandwidth > 0.0)) throw InputError("hardware: bandwidth must be positive");
    if (!(bytes_per_element > 0.0)) throw InputError("hardware: bytes_per_element must be positive");
  }
};

enum class LayerKind { kConv, kDeconv };

inline const char* to_string(LayerKind k) { return k == LayerKind::kConv ? "conv" : "deconv"; }

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  Shape kernel;  // spatial extents
  std::uint64_t in_channels = 1;
  std::uint64_t out_channels = 1;
  Shape ifmap;  // spatial extents, same rank as kernel
  std::uint64_t stride = 1;

  std::size_t rank() const { return ifmap.size(); }

  void validate() const {
    const std::string where = "layer '" + name + "': ";
    if (kernel.empty() || kernel.size() != ifmap.size())
      throw InputError(where + "kernel and ifmap must have the same non-zero rank");
    if (kernel.size() > 3) throw InputError(where + "only 1-D to 3-D layers are modelled");
    for (std::size_t e : kernel)
      if (e == 0) throw InputError(where + "kernel extents must be positive");
    for (std::size_t e : ifmap)
      if (e == 0) throw InputError(where + "ifmap extents must be positive");
    if (in_channels == 0) throw InputError(where + "in_channels must be positive");
    if (out_channels == 0) throw InputError(where + "out_channels must be positive");
    if (stride == 0) throw InputError(where + "stride must be positive");
    if (kind == LayerKind::kDeconv && stride != kDeconvFactor)
      throw InputError(where + "deconvolution stride must be 2, got " + std::to_string(stride));
  }
};

struct RoundPlan {
  Shape tile_origin;
  Shape tile;
  // C^i_k, one entry per phase (a single entry for convolution layers).
  std::vector<std::uint64_t> filters;

  std::uint64_t tile_elements() const { return element_count(tile); }
};

struct TileSchedule {
  // 1: weights stay resident and the ifmap tile streams; 0: the reverse.
  int beta = 1;
  std::vector<RoundPlan> rounds;
};

// Per-phase kernel extents the model charges for. A convolution is one phase
// holding the full kernel; a deconvolution uses its sub-kernel set.
inline std::vector<Shape> phase_extents(const LayerSpec& layer, const SubKernelSet* set) {
  if (layer.kind == LayerKind::kConv) return {layer.kernel};
  if (set == nullptr) throw InputError("layer '" + layer.name + "': deconvolution needs its sub-kernel set");
  if (set->source_dims != layer.kernel) {
    throw InputError("layer '" + layer.name + "': sub-kernel set was built for kernel " +
                     shape_string(set->source_dims) + ", layer has " + shape_string(layer.kernel));
  }
  std::vector<Shape> out;
  out.reserve(set->kernels.size());
  for (const auto& s : set->kernels) out.push_back(s.extents);
  return out;
}

// Dense convolution over the zero-upsampled ifmap that a naive accelerator
// runs for a deconvolution layer.
inline LayerSpec naive_equivalent(const LayerSpec& layer, bool with_border = true) {
  if (layer.kind == LayerKind::kConv) return layer;
  LayerSpec conv = layer;
  conv.kind = LayerKind::kConv;
  conv.stride = 1;
  for (auto& e : conv.ifmap) e = upsampled_extent(e, kDeconvFactor, with_border);
  return conv;
}

struct RoundTraffic {
  std::uint64_t ifmap = 0;
  std::vector<std::uint64_t> weights;
  std::vector<std::uint64_t> ofmap;

  std::uint64_t weights_total() const { return sum(weights); }
  std::uint64_t ofmap_total() const { return sum(ofmap); }

 private:
  static std::uint64_t sum(const std::vector<std::uint64_t>& v) {
    std::uint64_t s = 0;
    for (auto x : v) s += x;
    return s;
  }
};

namespace detail {

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

inline std::uint64_t transfer_cycles(std::uint64_t elements, double bandwidth) {
  if (elements == 0 || std::isinf(bandwidth)) return 0;
  return static_cast<std::uint64_t>(std::ceil(static_cast<long double>(elements) / bandwidth));
}

inline void check_round_shape(const RoundPlan& round, const LayerSpec& layer, std::size_t phases) {
  if (round.filters.size() != phases) {
    throw InputError("layer '" + layer.name + "': round carries " + std::to_string(round.filters.size()) +
                     " filter counts, layer has " + std::to_string(phases) + " phases");
  }
  if (round.tile.size() != layer.rank() || round.tile_origin.size() != layer.rank())
    throw InputError("layer '" + layer.name + "': round tile rank does not match the layer");
  for (std::size_t d = 0; d < layer.rank(); ++d) {
    if (round.tile[d] == 0 || round.tile_origin[d] + round.tile[d] > layer.ifmap[d]) {
      throw InputError("layer '" + layer.name + "': tile " + shape_string(round.tile) + " at " +
                       shape_string(round.tile_origin) + " leaves the ifmap " + shape_string(layer.ifmap));
    }
  }
}

}  // namespace detail

inline std::uint64_t compute_time(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set,
                                  const HardwareConfig& hw) {
  const auto phases = phase_extents(layer, set);
  detail::check_round_shape(round, layer, phases.size());
  const std::uint64_t tile = round.tile_elements();
  std::uint64_t cycles = 0;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const std::uint64_t macs = element_count(phases[k]) * layer.in_channels * round.filters[k] * tile;
    cycles += detail::ceil_div(macs, hw.pe_count());
  }
  return cycles;
}

inline std::uint64_t round_macs(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set) {
  const auto phases = phase_extents(layer, set);
  detail::check_round_shape(round, layer, phases.size());
  std::uint64_t macs = 0;
  for (std::size_t k = 0; k < phases.size(); ++k)
    macs += element_count(phases[k]) * layer.in_channels * round.filters[k] * round.tile_elements();
  return macs;
}

inline RoundTraffic dram_deltas(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set,
                                const HardwareConfig& hw) {
  const auto phases = phase_extents(layer, set);
  detail::check_round_shape(round, layer, phases.size());
  const std::uint64_t tile = round.tile_elements();
  const std::uint64_t s2 = layer.stride * layer.stride;
  RoundTraffic t;
  t.ifmap = tile * layer.in_channels;
  t.weights.resize(phases.size());
  t.ofmap.resize(phases.size());
  for (std::size_t k = 0; k < phases.size(); ++k) {
    t.weights[k] = element_count(phases[k]) * round.filters[k] *
                   (hw.weights_include_input_channels ? layer.in_channels : 1);
    t.ofmap[k] = detail::ceil_div(tile * round.filters[k], s2);
  }
  return t;
}

// DRAM elements a round moves under reuse order `beta`.
inline std::uint64_t charged_traffic(const RoundTraffic& t, int beta) {
  return beta == 1 ? t.ifmap + t.ofmap_total() : t.weights_total() + t.ofmap_total();
}

inline std::uint64_t memory_time(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set,
                                 const HardwareConfig& hw, int beta) {
  if (beta != 0 && beta != 1) throw InputError("beta must be 0 or 1");
  return detail::transfer_cycles(charged_traffic(dram_deltas(round, layer, set, hw), beta), hw.bandwidth);
}

inline std::uint64_t buffer_footprint(const RoundTraffic& t) {
  return t.ifmap + t.weights_total() + t.ofmap_total();
}

inline bool check_buffer(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set,
                         const HardwareConfig& hw) {
  return buffer_footprint(dram_deltas(round, layer, set, hw)) <= hw.usable_buffer();
}

// Throws InfeasibleError naming the violated constraint.
inline void validate_schedule(const TileSchedule& schedule, const LayerSpec& layer, const SubKernelSet* set,
                              const HardwareConfig& hw) {
  if (schedule.beta != 0 && schedule.beta != 1) throw InputError("beta must be 0 or 1");
  if (schedule.rounds.empty()) throw InfeasibleError(Constraint::kCoverage, "schedule has no rounds");
  const auto phases = phase_extents(layer, set);
  for (std::size_t i = 0; i < schedule.rounds.size(); ++i) {
    const RoundTraffic t = dram_deltas(schedule.rounds[i], layer, set, hw);
    if (buffer_footprint(t) > hw.usable_buffer()) {
      throw InfeasibleError(Constraint::kBuffer, "layer '" + layer.name + "' round " + std::to_string(i) +
                                                     " needs " + std::to_string(buffer_footprint(t)) +
                                                     " elements, usable buffer is " +
                                                     std::to_string(hw.usable_buffer()));
    }
  }

  // Sum filter counts over identical tiles first, then paint each tile.
  std::map<std::pair<Shape, Shape>, std::vector<std::uint64_t>> per_tile;
  for (const auto& r : schedule.rounds) {
    auto& acc = per_tile[{r.tile_origin, r.tile}];
    acc.resize(phases.size(), 0);
    for (std::size_t k = 0; k < phases.size(); ++k) acc[k] += r.filters[k];
  }
  const Shape strides = row_major_strides(layer.ifmap);
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const bool empty = element_count(phases[k]) == 0;
    std::vector<std::uint64_t> covered(element_count(layer.ifmap), 0);
    for (const auto& [key, counts] : per_tile) {
      if (counts[k] == 0) continue;
      if (empty) {
        throw InfeasibleError(Constraint::kCoverage, "layer '" + layer.name + "' assigns filters to empty phase " +
                                                         std::to_string(k));
      }
      const auto& [origin, tile] = key;
      Shape idx(tile.size(), 0);
      do {
        std::size_t off = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) off += (origin[d] + idx[d]) * strides[d];
        covered[off] += counts[k];
      } while (next_index(idx, tile));
    }
    if (empty) continue;
    for (std::size_t i = 0; i < covered.size(); ++i) {
      if (covered[i] != layer.out_channels) {
        throw InfeasibleError(Constraint::kCoverage,
                              "layer '" + layer.name + "' phase " + std::to_string(k) + " covers ifmap element " +
                                  std::to_string(i) + " with " + std::to_string(covered[i]) + " of " +
                                  std::to_string(layer.out_channels) + " filters");
      }
    }
  }
}

struct RoundLatency {
  std::uint64_t compute = 0;
  std::uint64_t memory = 0;
  std::uint64_t latency = 0;
};

struct LatencyReport {
  std::vector<RoundLatency> rounds;
  std::uint64_t total = 0;          // L
  std::uint64_t compute_total = 0;  // sum of l_c
  std::uint64_t memory_total = 0;   // sum of l_m
  // Raw per-round deltas summed over the schedule, independent of beta.
  std::uint64_t ifmap_traffic = 0;
  std::uint64_t weight_traffic = 0;
  std::uint64_t ofmap_traffic = 0;
  // What the chosen beta actually moves.
  std::uint64_t dram_elements = 0;
  std::uint64_t macs = 0;
  double utilization = 0.0;
};

inline RoundLatency round_latency(const RoundPlan& round, const LayerSpec& layer, const SubKernelSet* set,
                                  const HardwareConfig& hw, int beta) {
  RoundLatency r;
  r.compute = compute_time(round, layer, set, hw);
  r.memory = memory_time(round, layer, set, hw, beta);
  r.latency = std::max(r.compute, r.memory);
  return r;
}

inline LatencyReport total_latency(const TileSchedule& schedule, const LayerSpec& layer, const SubKernelSet* set,
                                   const HardwareConfig& hw) {
  layer.validate();
  hw.validate();
  validate_schedule(schedule, layer, set, hw);
  LatencyReport rep;
  rep.rounds.reserve(schedule.rounds.size());
  for (const auto& round : schedule.rounds) {
    const RoundLatency r = round_latency(round, layer, set, hw, schedule.beta);
    const RoundTraffic t = dram_deltas(round, layer, set, hw);
    rep.rounds.push_back(r);
    rep.total += r.latency;
    rep.compute_total += r.compute;
    rep.memory_total += r.memory;
    rep.ifmap_traffic += t.ifmap;
    rep.weight_traffic += t.weights_total();
    rep.ofmap_traffic += t.ofmap_total();
    rep.dram_elements += charged_traffic(t, schedule.beta);
    rep.macs += round_macs(round, layer, set);
  }
  if (rep.total > 0) {
    rep.utilization = static_cast<double>(rep.macs) /
                      (static_cast<double>(rep.total) * static_cast<double>(hw.pe_count()));
  }
  return rep;
}

}  // namespace stereoaccel

#endif  // STEREOACCEL_PERFMODEL_HPP_
