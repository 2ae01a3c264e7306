// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tile-schedule search for the performance model. Every filter of every
// (sub-)kernel is a knapsack item whose weight is the buffer space it needs in
// a round and whose value is the MACs it performs there. For a given ifmap
// tile, rounds are built by repeatedly packing the remaining items into the
// buffer space the tile leaves free until none remain.
//
// ConvR schedules each phase (sub-convolution) on its own, reloading the ifmap
// for every phase. ILAR also considers rounds that share one resident ifmap
// tile between phases; its search space contains ConvR's, so it keeps the
// ConvR schedule whenever that one is faster.

#ifndef STEREOACCEL_SCHEDULER_HPP_
#define STEREOACCEL_SCHEDULER_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stereoaccel/deconv.hpp"
#include "stereoaccel/error.hpp"
#include "stereoaccel/perfmodel.hpp"
#include "stereoaccel/tensor.hpp"

namespace stereoaccel {

enum class ScheduleMode { kConvR, kIlar };

inline const char* to_string(ScheduleMode m) { return m == ScheduleMode::kConvR ? "convr" : "ilar"; }

struct KnapsackItem {
  std::size_t phase = 0;
  std::size_t filter = 0;
  // Buffer elements: the filter's weights plus its share of the ofmap tile,
  // rounded up so that any packing within capacity passes the buffer check.
  std::uint64_t weight = 1;
  std::uint64_t value = 0;  // MACs on the current tile
  std::uint64_t phase_elements = 0;
};

// One item per (non-empty phase, output filter). `only_phase` restricts the
// list to a single phase.
inline std::vector<KnapsackItem> build_items(const LayerSpec& layer, const SubKernelSet* set,
                                             std::span<const std::size_t> tile, const HardwareConfig& hw,
                                             std::optional<std::size_t> only_phase = std::nullopt) {
  const auto phases = phase_extents(layer, set);
  if (tile.size() != layer.rank()) throw InputError("tile rank does not match layer '" + layer.name + "'");
  const std::uint64_t tile_elems = element_count(tile);
  const std::uint64_t s2 = layer.stride * layer.stride;
  const std::uint64_t ofmap_share = tile_elems / s2 + (tile_elems % s2 != 0);
  std::vector<KnapsackItem> items;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    if (only_phase && *only_phase != k) continue;
    const std::uint64_t elems = element_count(phases[k]);
    if (elems == 0) continue;
    const std::uint64_t w = elems * (hw.weights_include_input_channels ? layer.in_channels : 1) + ofmap_share;
    for (std::uint64_t f = 0; f < layer.out_channels; ++f)
      items.push_back({k, static_cast<std::size_t>(f), w, elems * layer.in_channels * tile_elems, elems});
  }
  if (items.empty()) throw InputError("layer '" + layer.name + "' has no non-empty sub-kernel to schedule");
  return items;
}

struct PackResult {
  std::vector<std::size_t> chosen;  // indices into the item list, ascending
  std::uint64_t value = 0;
  std::uint64_t weight = 0;
};

namespace detail {

using Key = __int128;

struct ItemGroup {
  std::uint64_t weight = 0;
  std::uint64_t value = 0;
  std::vector<std::size_t> members;  // item indices, lowest filter first
};

// Items with identical phase, weight and value are interchangeable; the
// groups come out in tie-break priority order.
inline std::vector<ItemGroup> group_items(std::span<const KnapsackItem> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.phase_elements != y.phase_elements) return x.phase_elements > y.phase_elements;
    if (x.phase != y.phase) return x.phase < y.phase;
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.value != y.value) return x.value > y.value;
    return x.filter < y.filter;
  });
  std::vector<ItemGroup> groups;
  for (std::size_t idx : order) {
    const auto& it = items[idx];
    if (groups.empty() || items[groups.back().members.front()].phase != it.phase ||
        groups.back().weight != it.weight || groups.back().value != it.value) {
      groups.push_back({it.weight, it.value, {}});
    }
    groups.back().members.push_back(idx);
  }
  return groups;
}

// Lexicographic objective (value, count of group 0, count of group 1, ...)
// folded into one integer: key = value * M + sum_g count_g * P_g.
struct KeyEncoding {
  std::vector<Key> place;
  Key radix = 1;
};

inline KeyEncoding encode_priority(const std::vector<ItemGroup>& groups) {
  KeyEncoding enc;
  enc.place.resize(groups.size());
  long double magnitude = 1.0L;
  long double total_value = 0.0L;
  for (std::size_t g = groups.size(); g-- > 0;) {
    enc.place[g] = enc.radix;
    enc.radix *= static_cast<Key>(groups[g].members.size() + 1);
    magnitude *= static_cast<long double>(groups[g].members.size() + 1);
    total_value += static_cast<long double>(groups[g].value) * static_cast<long double>(groups[g].members.size());
  }
  if ((total_value + 1.0L) * magnitude > 1e37L) throw InvariantError("knapsack tie-break key would overflow");
  return enc;
}

inline Key group_key(const ItemGroup& g, const KeyEncoding& enc, std::size_t gi, std::uint64_t count) {
  return static_cast<Key>(count) * (static_cast<Key>(g.value) * enc.radix + enc.place[gi]);
}

// Enumerates counts of all groups but the last, which takes whatever fits.
inline void enumerate_counts(const std::vector<ItemGroup>& groups, const KeyEncoding& enc, std::uint64_t capacity,
                             std::size_t gi, std::vector<std::uint64_t>& counts, Key key, Key& best_key,
                             std::vector<std::uint64_t>& best) {
  const ItemGroup& g = groups[gi];
  const std::uint64_t fit = std::min<std::uint64_t>(g.members.size(), capacity / g.weight);
  if (gi + 1 == groups.size()) {
    counts[gi] = fit;
    const Key k = key + group_key(g, enc, gi, fit);
    if (k > best_key) {
      best_key = k;
      best = counts;
    }
    return;
  }
  for (std::uint64_t c = 0; c <= fit; ++c) {
    counts[gi] = c;
    enumerate_counts(groups, enc, capacity - c * g.weight, gi + 1, counts, key + group_key(g, enc, gi, c), best_key,
                     best);
  }
}

// Bounded knapsack over groups via binary splitting and a 0/1 table.
inline std::vector<std::uint64_t> dp_counts(const std::vector<ItemGroup>& groups, const KeyEncoding& enc,
                                            std::uint64_t capacity, std::uint64_t unit) {
  struct Chunk {
    std::size_t group;
    std::uint64_t count;
    std::uint64_t weight;
    Key key;
  };
  std::vector<Chunk> chunks;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::uint64_t left = groups[gi].members.size();
    for (std::uint64_t step = 1; left > 0; step *= 2) {
      const std::uint64_t c = std::min(step, left);
      chunks.push_back({gi, c, c * groups[gi].weight / unit, group_key(groups[gi], enc, gi, c)});
      left -= c;
    }
  }
  const std::size_t cap = static_cast<std::size_t>(capacity / unit);
  std::vector<Key> best(cap + 1, 0);
  std::vector<bool> take(chunks.size() * (cap + 1), false);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::size_t w = static_cast<std::size_t>(chunks[i].weight);
    const Key v = chunks[i].key;
    for (std::size_t c = cap; c >= w && c != std::numeric_limits<std::size_t>::max(); --c) {
      const Key cand = best[c - w] + v;
      if (cand > best[c]) {
        best[c] = cand;
        take[i * (cap + 1) + c] = true;
      }
      if (c == 0) break;
    }
  }
  std::vector<std::uint64_t> counts(groups.size(), 0);
  std::size_t c = cap;
  for (std::size_t i = chunks.size(); i-- > 0;) {
    if (take[i * (cap + 1) + c]) {
      counts[chunks[i].group] += chunks[i].count;
      c -= static_cast<std::size_t>(chunks[i].weight);
    }
  }
  return counts;
}

}  // namespace detail

// Maximum-value subset of `items` within `capacity`, found by 0/1 knapsack
// dynamic programming. Among equal-value subsets it prefers more filters from
// larger sub-kernels, then lower phase index, then lower filter index.
inline PackResult pack_round(std::span<const KnapsackItem> items, std::uint64_t capacity) {
  if (items.empty()) return {};
  std::uint64_t min_weight = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total_weight = 0;
  for (const auto& it : items) {
    if (it.weight == 0) throw InputError("knapsack item weight must be positive");
    min_weight = std::min(min_weight, it.weight);
    total_weight += it.weight;
  }
  if (min_weight > capacity) {
    throw InfeasibleError(Constraint::kBuffer, "no filter fits in " + std::to_string(capacity) +
                                                   " free buffer elements (smallest needs " +
                                                   std::to_string(min_weight) + ")");
  }
  PackResult r;
  if (total_weight <= capacity) {
    r.chosen.resize(items.size());
    std::iota(r.chosen.begin(), r.chosen.end(), std::size_t{0});
  } else {
    const auto groups = detail::group_items(items);
    const auto enc = detail::encode_priority(groups);
    std::vector<std::uint64_t> counts(groups.size(), 0);
    // Enumeration costs the product of the leading group sizes; the table
    // costs chunks x capacity. Pick the cheaper exact method.
    long double enum_cost = 1.0L;
    std::uint64_t unit = 0, chunk_count = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g + 1 < groups.size()) enum_cost *= static_cast<long double>(groups[g].members.size() + 1);
      unit = std::gcd(unit, groups[g].weight);
      for (std::uint64_t left = groups[g].members.size(), s = 1; left > 0; s *= 2) {
        left -= std::min(s, left);
        ++chunk_count;
      }
    }
    const std::uint64_t cap = std::min(capacity, total_weight);
    const long double dp_cost = static_cast<long double>(chunk_count) * static_cast<long double>(cap / unit + 1);
    if (enum_cost <= dp_cost) {
      std::vector<std::uint64_t> scratch(groups.size(), 0);
      detail::Key best_key = -1;
      detail::enumerate_counts(groups, enc, cap, 0, scratch, 0, best_key, counts);
    } else {
      counts = detail::dp_counts(groups, enc, cap - cap % unit, unit);
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (std::uint64_t c = 0; c < counts[g]; ++c) r.chosen.push_back(groups[g].members[c]);
    std::sort(r.chosen.begin(), r.chosen.end());
  }
  for (std::size_t i : r.chosen) {
    r.value += items[i].value;
    r.weight += items[i].weight;
  }
  return r;
}

// Per-axis tile extents tried by the solver: divisors of the extent, powers
// of two below it, and the extent itself.
inline std::vector<std::size_t> tile_extent_candidates(std::size_t extent) {
  std::set<std::size_t> c;
  for (std::size_t d = 1; d <= extent; ++d)
    if (extent % d == 0) c.insert(d);
  for (std::size_t p = 1; p < extent; p *= 2) c.insert(p);
  c.insert(extent);
  return {c.begin(), c.end()};
}

namespace detail {

// Distinct tile shapes produced by cutting the ifmap into `tile`-sized
// pieces from the origin (edge pieces clipped), with how often each occurs.
struct TileShape {
  Shape extents;
  std::uint64_t occurrences = 0;
};

inline std::vector<TileShape> tile_shapes(const Shape& ifmap, const Shape& tile) {
  std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> axes(ifmap.size());
  for (std::size_t d = 0; d < ifmap.size(); ++d) {
    axes[d].push_back({tile[d], ifmap[d] / tile[d]});
    if (ifmap[d] % tile[d] != 0) axes[d].push_back({ifmap[d] % tile[d], 1});
    if (axes[d].front().second == 0) axes[d].erase(axes[d].begin());
  }
  std::vector<TileShape> out;
  Shape pick(ifmap.size(), 0), radix(ifmap.size());
  for (std::size_t d = 0; d < ifmap.size(); ++d) radix[d] = axes[d].size();
  do {
    TileShape s;
    s.extents.resize(ifmap.size());
    s.occurrences = 1;
    for (std::size_t d = 0; d < ifmap.size(); ++d) {
      s.extents[d] = axes[d][pick[d]].first;
      s.occurrences *= axes[d][pick[d]].second;
    }
    out.push_back(std::move(s));
  } while (next_index(pick, radix));
  return out;
}

// Tile origins in raster order.
inline std::vector<std::pair<Shape, Shape>> tile_grid(const Shape& ifmap, const Shape& tile) {
  Shape counts(ifmap.size());
  for (std::size_t d = 0; d < ifmap.size(); ++d) counts[d] = (ifmap[d] + tile[d] - 1) / tile[d];
  std::vector<std::pair<Shape, Shape>> out;
  Shape idx(ifmap.size(), 0);
  do {
    Shape origin(ifmap.size()), ext(ifmap.size());
    for (std::size_t d = 0; d < ifmap.size(); ++d) {
      origin[d] = idx[d] * tile[d];
      ext[d] = std::min(tile[d], ifmap[d] - origin[d]);
    }
    out.emplace_back(std::move(origin), std::move(ext));
  } while (next_index(idx, counts));
  return out;
}

inline std::vector<Shape> tile_grid_candidates(const Shape& ifmap) {
  std::vector<std::vector<std::size_t>> per_axis;
  for (std::size_t e : ifmap) per_axis.push_back(tile_extent_candidates(e));
  std::vector<Shape> out;
  Shape pick(ifmap.size(), 0), radix(ifmap.size());
  for (std::size_t d = 0; d < ifmap.size(); ++d) radix[d] = per_axis[d].size();
  do {
    Shape t(ifmap.size());
    for (std::size_t d = 0; d < ifmap.size(); ++d) t[d] = per_axis[d][pick[d]];
    out.push_back(std::move(t));
  } while (next_index(pick, radix));
  return out;
}

// Filter counts per phase for each round of one tile shape.
using RoundCounts = std::vector<std::vector<std::uint64_t>>;

class GreedyPlanner {
 public:
  GreedyPlanner(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw)
      : layer_(layer), set_(set), hw_(hw), phases_(phase_extents(layer, set)) {}

  std::size_t phase_count() const { return phases_.size(); }
  bool phase_empty(std::size_t k) const { return element_count(phases_[k]) == 0; }

  // Rounds for one tile shape, or nullopt when even one filter does not fit.
  const std::optional<RoundCounts>& pack(const Shape& tile, std::optional<std::size_t> only_phase) {
    auto key = std::make_pair(tile, only_phase ? static_cast<long long>(*only_phase) : -1LL);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(std::move(key), compute_pack(tile, only_phase)).first->second;
  }

  // Latency of covering the whole ifmap with `tile`-sized pieces, each
  // processed with the packing of its shape.
  std::optional<std::uint64_t> cost(const Shape& tile, std::optional<std::size_t> only_phase, int beta) {
    std::uint64_t total = 0;
    for (const TileShape& s : tile_shapes(layer_.ifmap, tile)) {
      const auto& rounds = pack(s.extents, only_phase);
      if (!rounds) return std::nullopt;
      std::uint64_t per_tile = 0;
      for (const auto& counts : *rounds) {
        RoundPlan r{Shape(layer_.rank(), 0), s.extents, counts};
        per_tile += round_latency(r, layer_, set_, hw_, beta).latency;
      }
      total += per_tile * s.occurrences;
    }
    return total;
  }

  void emit(const Shape& tile, std::optional<std::size_t> only_phase, std::vector<RoundPlan>& out) {
    for (auto& [origin, ext] : tile_grid(layer_.ifmap, tile)) {
      const auto& rounds = pack(ext, only_phase);
      if (!rounds) throw InvariantError("emitting an infeasible tile");
      for (const auto& counts : *rounds) out.push_back({origin, ext, counts});
    }
  }

 private:
  std::optional<RoundCounts> compute_pack(const Shape& tile, std::optional<std::size_t> only_phase) const {
    const std::uint64_t ifmap_elems = element_count(tile) * layer_.in_channels;
    if (ifmap_elems >= hw_.usable_buffer()) return std::nullopt;
    std::vector<KnapsackItem> remaining = build_items(layer_, set_, tile, hw_, only_phase);
    const std::uint64_t capacity = hw_.usable_buffer() - ifmap_elems;
    RoundCounts rounds;
    while (!remaining.empty()) {
      PackResult pick;
      try {
        pick = pack_round(remaining, capacity);
      } catch (const InfeasibleError&) {
        return std::nullopt;
      }
      std::vector<std::uint64_t> counts(phases_.size(), 0);
      std::vector<KnapsackItem> rest;
      rest.reserve(remaining.size() - pick.chosen.size());
      std::size_t next = 0;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (next < pick.chosen.size() && pick.chosen[next] == i) {
          ++counts[remaining[i].phase];
          ++next;
        } else {
          rest.push_back(remaining[i]);
        }
      }
      rounds.push_back(std::move(counts));
      remaining = std::move(rest);
    }
    return rounds;
  }

  const LayerSpec& layer_;
  const SubKernelSet* set_;
  const HardwareConfig& hw_;
  std::vector<Shape> phases_;
  std::map<std::pair<Shape, long long>, std::optional<RoundCounts>> cache_;
};

struct TileChoice {
  Shape tile;
  std::uint64_t cost = std::numeric_limits<std::uint64_t>::max();
  bool found = false;
};

inline TileChoice best_tile(GreedyPlanner& planner, const std::vector<Shape>& candidates,
                            std::optional<std::size_t> only_phase, int beta) {
  TileChoice best;
  // Largest tiles first, so ties keep the schedule with fewer rounds.
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    const Shape& t = *it;
    const auto c = planner.cost(t, only_phase, beta);
    if (c && (!best.found || *c < best.cost)) {
      best.tile = t;
      best.cost = *c;
      best.found = true;
    }
  }
  return best;
}

struct ModeCost {
  std::uint64_t cost = std::numeric_limits<std::uint64_t>::max();
  bool shared = false;
  Shape shared_tile;
  std::vector<Shape> per_phase_tile;  // ConvR, empty phases hold {}
};

inline ModeCost convr_cost(GreedyPlanner& planner, const std::vector<Shape>& candidates, int beta) {
  ModeCost mc;
  mc.per_phase_tile.resize(planner.phase_count());
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < planner.phase_count(); ++k) {
    if (planner.phase_empty(k)) continue;
    const TileChoice c = best_tile(planner, candidates, k, beta);
    if (!c.found) return mc;
    mc.per_phase_tile[k] = c.tile;
    total += c.cost;
  }
  mc.cost = total;
  return mc;
}

inline TileSchedule materialize(GreedyPlanner& planner, const ModeCost& mc, int beta) {
  TileSchedule s;
  s.beta = beta;
  if (mc.shared) {
    planner.emit(mc.shared_tile, std::nullopt, s.rounds);
  } else {
    for (std::size_t k = 0; k < planner.phase_count(); ++k)
      if (!planner.phase_empty(k)) planner.emit(mc.per_phase_tile[k], k, s.rounds);
  }
  return s;
}

inline void check_mode(const LayerSpec& layer, const SubKernelSet* set, ScheduleMode mode) {
  layer.validate();
  if (layer.kind == LayerKind::kDeconv && set == nullptr)
    throw InputError("layer '" + layer.name + "': deconvolution needs its sub-kernel set");
  if (mode == ScheduleMode::kIlar && layer.kind != LayerKind::kDeconv)
    throw InputError("layer '" + layer.name + "': ILAR applies only to transformed deconvolution layers");
}

}  // namespace detail

// Greedy + dynamic-programming schedule search. Tries every tile on the
// candidate grid and both reuse orders and keeps the lowest modelled latency.
inline TileSchedule solve(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw,
                          ScheduleMode mode) {
  detail::check_mode(layer, set, mode);
  hw.validate();
  detail::GreedyPlanner planner(layer, set, hw);
  const auto candidates = detail::tile_grid_candidates(layer.ifmap);

  std::optional<std::pair<detail::ModeCost, int>> best;
  for (int beta : {1, 0}) {
    detail::ModeCost mc = detail::convr_cost(planner, candidates, beta);
    if (mode == ScheduleMode::kIlar) {
      const detail::TileChoice shared = detail::best_tile(planner, candidates, std::nullopt, beta);
      if (shared.found && shared.cost <= mc.cost) {
        mc.cost = shared.cost;
        mc.shared = true;
        mc.shared_tile = shared.tile;
      }
    }
    if (mc.cost != std::numeric_limits<std::uint64_t>::max() && (!best || mc.cost < best->first.cost))
      best = {mc, beta};
  }
  if (!best) {
    throw InfeasibleError(Constraint::kBuffer, "layer '" + layer.name + "': no tile fits one filter in " +
                                                   std::to_string(hw.usable_buffer()) + " usable buffer elements");
  }
  TileSchedule s = detail::materialize(planner, best->first, best->second);
  validate_schedule(s, layer, set, hw);
  return s;
}

// Fixed policy without reuse optimization: the buffer is split statically in
// half between the ifmap tile and everything else, the tile is halved along
// its largest axis until it fits, phases run one after another with as many
// filters per round as fit, and weights stay resident (beta = 1).
inline TileSchedule default_schedule(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw) {
  layer.validate();
  hw.validate();
  const auto phases = phase_extents(layer, set);
  const std::uint64_t half = hw.usable_buffer() / 2;
  Shape tile = layer.ifmap;
  auto fits = [&](const Shape& t) {
    const std::uint64_t ifmap_elems = element_count(t) * layer.in_channels;
    if (ifmap_elems > half) return false;
    for (std::size_t k = 0; k < phases.size(); ++k) {
      if (element_count(phases[k]) == 0) continue;
      RoundPlan r{Shape(layer.rank(), 0), t, std::vector<std::uint64_t>(phases.size(), 0)};
      r.filters[k] = 1;
      if (!check_buffer(r, layer, set, hw)) return false;
    }
    return true;
  };
  while (!fits(tile)) {
    auto largest = std::max_element(tile.begin(), tile.end());
    if (*largest == 1) {
      throw InfeasibleError(Constraint::kBuffer,
                            "layer '" + layer.name + "': a single-element tile does not fit the static split");
    }
    *largest = (*largest + 1) / 2;
  }
  TileSchedule s;
  s.beta = 1;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    if (element_count(phases[k]) == 0) continue;
    for (auto& [origin, ext] : detail::tile_grid(layer.ifmap, tile)) {
      std::uint64_t left = layer.out_channels;
      while (left > 0) {
        // Largest count that fits, by doubling then bisection.
        std::uint64_t lo = 1, hi = left;
        auto ok = [&](std::uint64_t c) {
          RoundPlan r{origin, ext, std::vector<std::uint64_t>(phases.size(), 0)};
          r.filters[k] = c;
          return check_buffer(r, layer, set, hw);
        };
        while (lo < hi) {
          const std::uint64_t mid = lo + (hi - lo + 1) / 2;
          if (ok(mid)) lo = mid;
          else hi = mid - 1;
        }
        RoundPlan r{origin, ext, std::vector<std::uint64_t>(phases.size(), 0)};
        r.filters[k] = lo;
        s.rounds.push_back(std::move(r));
        left -= lo;
      }
    }
  }
  validate_schedule(s, layer, set, hw);
  return s;
}

struct ExhaustiveBounds {
  std::uint64_t max_candidates = 1'000'000;
};

namespace detail {

// Minimum-latency split of the filters of one tile shape into rounds. Round
// count vectors range over every feasible combination; `phases_used` lists
// which phases may appear together in a round.
class PartitionSearch {
 public:
  PartitionSearch(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw, const Shape& tile,
                  std::vector<std::size_t> phases_used, std::size_t phase_count, int beta)
      : layer_(layer), set_(set), hw_(hw), tile_(tile), used_(std::move(phases_used)), phase_count_(phase_count),
        beta_(beta) {
    const std::uint64_t radix = layer.out_channels + 1;
    states_ = 1;
    for (std::size_t i = 0; i < used_.size(); ++i) states_ *= radix;
    round_cost_.assign(states_, {kInf, 0});
    for (std::uint64_t s = 1; s < states_; ++s) {
      RoundPlan r{Shape(layer.rank(), 0), tile, counts_of(s)};
      if (!check_buffer(r, layer, set, hw)) continue;
      const RoundTraffic t = dram_deltas(r, layer, set, hw);
      round_cost_[s] = {round_latency(r, layer, set, hw, beta).latency,
                        t.ifmap + t.weights_total() + t.ofmap_total()};
    }
    best_.assign(states_, {kInf, 0});
    choice_.assign(states_, 0);
    best_[0] = {0, 0};
    // Every sub-vector of s has a smaller encoding, so ascending order works.
    for (std::uint64_t s = 1; s < states_; ++s) {
      const auto digits = digits_of(s);
      std::vector<std::uint64_t> c(digits.size(), 0);
      while (advance(c, digits)) {
        const std::uint64_t cs = encode(c);
        const auto& rc = round_cost_[cs];
        if (rc.first == kInf) continue;
        const auto& rest = best_[s - cs];
        if (rest.first == kInf) continue;
        const std::pair<std::uint64_t, std::uint64_t> cand{rc.first + rest.first, rc.second + rest.second};
        if (cand < best_[s]) {
          best_[s] = cand;
          choice_[s] = cs;
        }
      }
    }
  }

  bool feasible() const { return best_.back().first != kInf; }
  std::pair<std::uint64_t, std::uint64_t> best() const { return best_.back(); }

  RoundCounts rounds() const {
    RoundCounts out;
    for (std::uint64_t s = states_ - 1; s != 0; s -= choice_[s]) out.push_back(counts_of(choice_[s]));
    return out;
  }

 private:
  static constexpr std::uint64_t kInf = std::numeric_limits<std::uint64_t>::max();

  std::vector<std::uint64_t> digits_of(std::uint64_t s) const {
    std::vector<std::uint64_t> d(used_.size());
    for (std::size_t i = 0; i < used_.size(); ++i) {
      d[i] = s % (layer_.out_channels + 1);
      s /= layer_.out_channels + 1;
    }
    return d;
  }
  std::uint64_t encode(const std::vector<std::uint64_t>& d) const {
    std::uint64_t s = 0;
    for (std::size_t i = used_.size(); i-- > 0;) s = s * (layer_.out_channels + 1) + d[i];
    return s;
  }
  std::vector<std::uint64_t> counts_of(std::uint64_t s) const {
    std::vector<std::uint64_t> counts(phase_count_, 0);
    const auto d = digits_of(s);
    for (std::size_t i = 0; i < used_.size(); ++i) counts[used_[i]] = d[i];
    return counts;
  }
  // Next non-zero vector c <= limit in odometer order; false when exhausted.
  static bool advance(std::vector<std::uint64_t>& c, const std::vector<std::uint64_t>& limit) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] < limit[i]) {
        ++c[i];
        return true;
      }
      c[i] = 0;
    }
    return false;
  }

  const LayerSpec& layer_;
  const SubKernelSet* set_;
  const HardwareConfig& hw_;
  Shape tile_;
  std::vector<std::size_t> used_;
  std::size_t phase_count_;
  int beta_;
  std::uint64_t states_ = 1;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> round_cost_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> best_;
  std::vector<std::uint64_t> choice_;
};

struct ExhaustivePlan {
  std::pair<std::uint64_t, std::uint64_t> cost{std::numeric_limits<std::uint64_t>::max(), 0};
  Shape tile;
  std::map<Shape, RoundCounts> rounds_by_shape;
  bool found = false;
};

inline ExhaustivePlan exhaustive_tile_search(const LayerSpec& layer, const SubKernelSet* set,
                                             const HardwareConfig& hw, const std::vector<std::size_t>& used,
                                             std::size_t phase_count, int beta) {
  ExhaustivePlan best;
  Shape t(layer.rank(), 1);
  const Shape radix = layer.ifmap;
  Shape idx(layer.rank(), 0);
  do {
    for (std::size_t d = 0; d < t.size(); ++d) t[d] = idx[d] + 1;
    ExhaustivePlan plan;
    plan.tile = t;
    plan.cost = {0, 0};
    bool ok = true;
    for (const TileShape& s : tile_shapes(layer.ifmap, t)) {
      PartitionSearch search(layer, set, hw, s.extents, used, phase_count, beta);
      if (!search.feasible()) {
        ok = false;
        break;
      }
      plan.cost.first += search.best().first * s.occurrences;
      plan.cost.second += search.best().second * s.occurrences;
      plan.rounds_by_shape[s.extents] = search.rounds();
    }
    if (ok && plan.cost < best.cost) {
      plan.found = true;
      best = std::move(plan);
    }
  } while (next_index(idx, radix));
  return best;
}

inline void emit_plan(const LayerSpec& layer, const ExhaustivePlan& plan, std::vector<RoundPlan>& out) {
  for (auto& [origin, ext] : tile_grid(layer.ifmap, plan.tile))
    for (const auto& counts : plan.rounds_by_shape.at(ext)) out.push_back({origin, ext, counts});
}

}  // namespace detail

// Number of (tile size, round vector) pairs the exact search visits.
inline std::uint64_t exhaustive_candidates(const LayerSpec& layer, const SubKernelSet* set, ScheduleMode mode) {
  const auto phases = phase_extents(layer, set);
  std::uint64_t active = 0;
  for (const auto& p : phases) active += element_count(p) != 0;
  const long double tiles = static_cast<long double>(element_count(layer.ifmap));
  long double per_tile = static_cast<long double>(active) * static_cast<long double>(layer.out_channels + 1);
  if (mode == ScheduleMode::kIlar) {
    long double shared = 1.0L;
    for (std::uint64_t i = 0; i < active; ++i) shared *= static_cast<long double>(layer.out_channels + 1);
    per_tile += shared;
  }
  const long double n = tiles * per_tile;
  return n > 1.8e19L ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(n);
}

// Exact minimum-latency schedule over every tile size, every split of filters
// into rounds and both reuse orders. For test-sized layers only.
inline TileSchedule exhaustive(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw,
                               ScheduleMode mode, ExhaustiveBounds bounds = {}) {
  detail::check_mode(layer, set, mode);
  hw.validate();
  const std::uint64_t candidates = exhaustive_candidates(layer, set, mode);
  if (candidates > bounds.max_candidates) {
    throw InputError("exhaustive search over " + std::to_string(candidates) + " candidates exceeds the bound of " +
                     std::to_string(bounds.max_candidates));
  }
  const auto phases = phase_extents(layer, set);
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < phases.size(); ++k)
    if (element_count(phases[k]) != 0) active.push_back(k);

  using Cost = std::pair<std::uint64_t, std::uint64_t>;
  std::optional<std::pair<Cost, TileSchedule>> best;
  for (int beta : {1, 0}) {
    // Per-phase schedules (ConvR).
    Cost convr{0, 0};
    std::vector<detail::ExhaustivePlan> per_phase;
    bool convr_ok = true;
    for (std::size_t k : active) {
      auto plan = detail::exhaustive_tile_search(layer, set, hw, {k}, phases.size(), beta);
      if (!plan.found) {
        convr_ok = false;
        break;
      }
      convr.first += plan.cost.first;
      convr.second += plan.cost.second;
      per_phase.push_back(std::move(plan));
    }
    std::optional<std::pair<Cost, TileSchedule>> here;
    if (convr_ok) {
      TileSchedule s;
      s.beta = beta;
      for (const auto& plan : per_phase) detail::emit_plan(layer, plan, s.rounds);
      here = {convr, std::move(s)};
    }
    if (mode == ScheduleMode::kIlar) {
      auto shared = detail::exhaustive_tile_search(layer, set, hw, active, phases.size(), beta);
      if (shared.found && (!here || shared.cost <= here->first)) {
        TileSchedule s;
        s.beta = beta;
        detail::emit_plan(layer, shared, s.rounds);
        here = {shared.cost, std::move(s)};
      }
    }
    if (here && (!best || here->first < best->first)) best = std::move(here);
  }
  if (!best) {
    throw InfeasibleError(Constraint::kBuffer,
                          "layer '" + layer.name + "': no tile fits one filter in the usable buffer");
  }
  validate_schedule(best->second, layer, set, hw);
  return best->second;
}

struct ModeComparison {
  TileSchedule convr_schedule;
  TileSchedule ilar_schedule;
  LatencyReport convr;
  LatencyReport ilar;
};

inline ModeComparison compare_modes(const LayerSpec& layer, const SubKernelSet* set, const HardwareConfig& hw,
                                    bool use_exhaustive = false, ExhaustiveBounds bounds = {}) {
  ModeComparison c;
  if (use_exhaustive) {
    c.convr_schedule = exhaustive(layer, set, hw, ScheduleMode::kConvR, bounds);
    c.ilar_schedule = exhaustive(layer, set, hw, ScheduleMode::kIlar, bounds);
  } else {
    c.convr_schedule = solve(layer, set, hw, ScheduleMode::kConvR);
    c.ilar_schedule = solve(layer, set, hw, ScheduleMode::kIlar);
  }
  c.convr = total_latency(c.convr_schedule, layer, set, hw);
  c.ilar = total_latency(c.ilar_schedule, layer, set, hw);
  return c;
}

}  // namespace stereoaccel

#endif  // STEREOACCEL_SCHEDULER_HPP_
