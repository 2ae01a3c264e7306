// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0

#include "stereoaccel/scheduler.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <random>

namespace stereoaccel {
namespace {

LayerSpec make_layer(LayerKind kind, Shape kernel, std::uint64_t in_c, std::uint64_t out_c, Shape ifmap) {
  LayerSpec l;
  l.name = kind == LayerKind::kConv ? "conv" : "deconv";
  l.kind = kind;
  l.kernel = std::move(kernel);
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.ifmap = std::move(ifmap);
  l.stride = kind == LayerKind::kConv ? 1 : 2;
  return l;
}

HardwareConfig make_hw(std::uint64_t pe, std::uint64_t buffer, double bw) {
  HardwareConfig hw;
  hw.pe_rows = pe;
  hw.pe_cols = pe;
  hw.buffer_capacity = buffer;
  hw.bandwidth = bw;
  hw.double_buffered = false;
  return hw;
}

TEST(BuildItemsTest, OneItemPerPhaseAndFilter) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 2, 4, {6, 6});
  const SubKernelSet set = decompose_shape(l.kernel);
  const Shape tile{3, 3};
  const auto items = build_items(l, &set, tile, make_hw(4, 4096, 8));
  EXPECT_EQ(items.size(), 16u);
  std::uint64_t v0 = 0, v3 = 0;
  for (const auto& it : items) {
    EXPECT_GT(it.weight, 0u);
    if (it.phase == 0) v0 = it.value;
    if (it.phase == 3) v3 = it.value;
  }
  EXPECT_GT(v0, v3);
  EXPECT_EQ(v0, 4u * 2u * 9u);
  EXPECT_EQ(v3, 1u * 2u * 9u);

  const LayerSpec c = make_layer(LayerKind::kConv, {3, 3}, 2, 4, {6, 6});
  EXPECT_EQ(build_items(c, nullptr, tile, make_hw(4, 4096, 8)).size(), 4u);
}

TEST(BuildItemsTest, EmptyPhasesContributeNoItems) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {1, 1}, 2, 3, {4, 4});
  const SubKernelSet set = decompose_shape(l.kernel);
  EXPECT_EQ(build_items(l, &set, Shape{2, 2}, make_hw(4, 4096, 8)).size(), 3u);
}

TEST(PackRoundTest, EverythingFits) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 2, 4, {6, 6});
  const SubKernelSet set = decompose_shape(l.kernel);
  const auto items = build_items(l, &set, Shape{2, 2}, make_hw(4, 4096, 8));
  const PackResult r = pack_round(items, 1 << 20);
  EXPECT_EQ(r.chosen.size(), items.size());
}

TEST(PackRoundTest, LargeSubKernelWinsValueTie) {
  const std::vector<KnapsackItem> items{
      {3, 0, 5, 4, 1},
      {3, 1, 5, 4, 1},
      {0, 0, 10, 8, 4},
  };
  const PackResult r = pack_round(items, 10);
  ASSERT_EQ(r.chosen, (std::vector<std::size_t>{2}));
  EXPECT_EQ(r.value, 8u);
}

TEST(PackRoundTest, LowerFilterIndexWinsWithinPhase) {
  const std::vector<KnapsackItem> items{{1, 2, 3, 6, 2}, {1, 0, 3, 6, 2}, {1, 1, 3, 6, 2}};
  EXPECT_EQ(pack_round(items, 6).chosen, (std::vector<std::size_t>{1, 2}));
}

TEST(PackRoundTest, NothingFitsIsInfeasible) {
  const std::vector<KnapsackItem> items{{0, 0, 10, 1, 1}};
  try {
    pack_round(items, 9);
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.violated(), Constraint::kBuffer);
  }
}

TEST(PackRoundTest, MatchesBruteForceSubsets) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<KnapsackItem> items(n);
    // Few distinct (phase, weight, value) triples so grouping is exercised.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t phase = rng() % 3;
      items[i] = {phase, i, 1 + (rng() % 4) * (phase + 1), (rng() % 5) * (phase + 2), 3 - phase};
    }
    std::uint64_t total = 0;
    for (const auto& it : items) total += it.weight;
    std::uint64_t min_w = items[0].weight;
    for (const auto& it : items) min_w = std::min(min_w, it.weight);
    const std::uint64_t cap = min_w + rng() % (total + 1);
    std::uint64_t best = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::uint64_t w = 0, v = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) {
          w += items[i].weight;
          v += items[i].value;
        }
      if (w <= cap) best = std::max(best, v);
    }
    const PackResult r = pack_round(items, cap);
    EXPECT_EQ(r.value, best) << "trial " << trial;
    EXPECT_LE(r.weight, cap);
  }
}

TEST(PackRoundTest, EnumerationAndTableAgree) {
  // Two groups force the enumeration path; many groups with a small
  // capacity force the table. Both must reach the brute-force optimum.
  std::mt19937 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<KnapsackItem> items;
    const std::size_t groups = trial % 2 == 0 ? 2 : 8;
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t f = 0; f < 2; ++f) items.push_back({g, f, 1 + rng() % 7, rng() % 20, 8 - g});
    std::uint64_t best = 0;
    const std::uint64_t cap = 7 + rng() % 20;
    for (std::uint32_t mask = 0; mask < (1u << items.size()); ++mask) {
      std::uint64_t w = 0, v = 0;
      for (std::size_t i = 0; i < items.size(); ++i)
        if (mask >> i & 1u) {
          w += items[i].weight;
          v += items[i].value;
        }
      if (w <= cap) best = std::max(best, v);
    }
    EXPECT_EQ(pack_round(items, cap).value, best);
  }
}

TEST(SolveTest, SingleRoundWhenEverythingFits) {
  const LayerSpec l = make_layer(LayerKind::kConv, {3, 3}, 2, 1, {5, 5});
  const HardwareConfig hw = make_hw(4, 1 << 20, 8);
  const TileSchedule s = solve(l, nullptr, hw, ScheduleMode::kConvR);
  ASSERT_EQ(s.rounds.size(), 1u);
  const auto rep = total_latency(s, l, nullptr, hw);
  EXPECT_EQ(rep.total, std::max(rep.rounds[0].compute, rep.rounds[0].memory));
}

TEST(SolveTest, IlarRejectsConvolution) {
  const LayerSpec l = make_layer(LayerKind::kConv, {3, 3}, 2, 1, {5, 5});
  EXPECT_THROW(solve(l, nullptr, make_hw(4, 4096, 8), ScheduleMode::kIlar), InputError);
}

TEST(SolveTest, TooSmallBufferIsInfeasible) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 8, 4, {4, 4});
  const SubKernelSet set = decompose_shape(l.kernel);
  try {
    solve(l, &set, make_hw(4, 8, 8), ScheduleMode::kIlar);
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.violated(), Constraint::kBuffer);
  }
}

struct RandomInstance {
  LayerSpec layer;
  SubKernelSet set;
  HardwareConfig hw;
};

RandomInstance random_instance(std::mt19937& rng, std::size_t max_extent, std::uint64_t max_out) {
  RandomInstance r;
  const Shape ifmap{1 + rng() % max_extent, 1 + rng() % max_extent};
  r.layer = make_layer(LayerKind::kDeconv, {1 + rng() % 4, 1 + rng() % 4}, 1 + rng() % 4, 1 + rng() % max_out, ifmap);
  r.set = decompose_shape(r.layer.kernel);
  // Buffer between "barely one filter" and "everything".
  std::uint64_t need = r.layer.in_channels + 1;
  for (const auto& k : r.set.kernels) need = std::max<std::uint64_t>(need, r.layer.in_channels + k.elements() + 1);
  const std::uint64_t all = element_count(ifmap) * (r.layer.in_channels + r.layer.out_channels * 4) + 64;
  r.hw = make_hw(1 + rng() % 4, need + rng() % all, rng() % 4 == 0 ? 0.5 : 1.0 + rng() % 8);
  return r;
}

TEST(SolveTest, SchedulesAlwaysSatisfyConstraints) {
  std::mt19937 rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomInstance inst = random_instance(rng, 7, 6);
    for (ScheduleMode mode : {ScheduleMode::kConvR, ScheduleMode::kIlar}) {
      TileSchedule s;
      try {
        s = solve(inst.layer, &inst.set, inst.hw, mode);
      } catch (const InfeasibleError&) {
        continue;
      }
      EXPECT_NO_THROW(validate_schedule(s, inst.layer, &inst.set, inst.hw));
    }
  }
}

TEST(SolveTest, IlarNeverSlowerThanConvR) {
  std::mt19937 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomInstance inst = random_instance(rng, 8, 8);
    try {
      const auto c = compare_modes(inst.layer, &inst.set, inst.hw);
      EXPECT_LE(c.ilar.total, c.convr.total);
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(SolveTest, Deterministic) {
  std::mt19937 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = random_instance(rng, 8, 8);
    try {
      const TileSchedule a = solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kIlar);
      const TileSchedule b = solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kIlar);
      ASSERT_EQ(a.beta, b.beta);
      ASSERT_EQ(a.rounds.size(), b.rounds.size());
      for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        EXPECT_EQ(a.rounds[i].tile_origin, b.rounds[i].tile_origin);
        EXPECT_EQ(a.rounds[i].tile, b.rounds[i].tile);
        EXPECT_EQ(a.rounds[i].filters, b.rounds[i].filters);
      }
    } catch (const InfeasibleError&) {
    }
  }
}

TEST(SolveTest, PaperScaleLayerSolvesQuickly) {
  LayerSpec l = make_layer(LayerKind::kDeconv, {5, 5}, 128, 64, {54, 96});
  const SubKernelSet set = decompose_shape(l.kernel);
  HardwareConfig hw;
  for (ScheduleMode mode : {ScheduleMode::kConvR, ScheduleMode::kIlar}) {
    const auto t0 = std::chrono::steady_clock::now();
    const TileSchedule s = solve(l, &set, hw, mode);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 1.0) << to_string(mode);
    EXPECT_NO_THROW(validate_schedule(s, l, &set, hw));
  }
}

TEST(DefaultScheduleTest, FeasibleAndNoFasterThanSearch) {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomInstance inst = random_instance(rng, 8, 8);
    TileSchedule d;
    try {
      d = default_schedule(inst.layer, &inst.set, inst.hw);
    } catch (const InfeasibleError&) {
      continue;
    }
    EXPECT_NO_THROW(validate_schedule(d, inst.layer, &inst.set, inst.hw));
    const auto s = solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kConvR);
    EXPECT_LE(total_latency(s, inst.layer, &inst.set, inst.hw).total,
              total_latency(d, inst.layer, &inst.set, inst.hw).total);
  }
}

TEST(ExhaustiveTest, BoundIsEnforced) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 4, 16, {16, 16});
  const SubKernelSet set = decompose_shape(l.kernel);
  EXPECT_THROW(exhaustive(l, &set, make_hw(4, 4096, 8), ScheduleMode::kIlar), InputError);
  EXPECT_THROW(exhaustive(l, &set, make_hw(4, 4096, 8), ScheduleMode::kConvR, {10}), InputError);
}

TEST(ExhaustiveTest, EqualsGreedyWhenOneRoundFits) {
  const LayerSpec l = make_layer(LayerKind::kConv, {2, 2}, 2, 2, {3, 3});
  const HardwareConfig hw = make_hw(64, 1 << 20, std::numeric_limits<double>::infinity());
  const auto g = total_latency(solve(l, nullptr, hw, ScheduleMode::kConvR), l, nullptr, hw).total;
  const auto e = total_latency(exhaustive(l, nullptr, hw, ScheduleMode::kConvR), l, nullptr, hw).total;
  EXPECT_EQ(g, e);
}

TEST(ExhaustiveTest, GreedyNeverBeatsOracleAndIlarContainsConvR) {
  std::mt19937 rng(67);
  int solved = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const RandomInstance inst = random_instance(rng, 4, 3);
    TileSchedule ec, ei;
    try {
      ec = exhaustive(inst.layer, &inst.set, inst.hw, ScheduleMode::kConvR);
      ei = exhaustive(inst.layer, &inst.set, inst.hw, ScheduleMode::kIlar);
    } catch (const InfeasibleError&) {
      EXPECT_THROW(solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kConvR), InfeasibleError);
      continue;
    }
    ++solved;
    const auto lec = total_latency(ec, inst.layer, &inst.set, inst.hw).total;
    const auto lei = total_latency(ei, inst.layer, &inst.set, inst.hw).total;
    EXPECT_LE(lei, lec);
    // The greedy may fail where the exact search with unrounded ofmap
    // shares still fits; otherwise it must not beat the oracle.
    try {
      const auto gc = total_latency(solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kConvR), inst.layer,
                                    &inst.set, inst.hw).total;
      const auto gi = total_latency(solve(inst.layer, &inst.set, inst.hw, ScheduleMode::kIlar), inst.layer,
                                    &inst.set, inst.hw).total;
      EXPECT_GE(gc, lec);
      EXPECT_GE(gi, lei);
    } catch (const InfeasibleError&) {
    }
  }
  EXPECT_GT(solved, 60);
}

TEST(CompareModesTest, LargeBufferTies) {
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 4, 4, {4, 4});
  const SubKernelSet set = decompose_shape(l.kernel);
  const auto c = compare_modes(l, &set, make_hw(2, 1 << 20, std::numeric_limits<double>::infinity()));
  EXPECT_EQ(c.convr.total, c.ilar.total);
}

TEST(CompareModesTest, SharedIfmapCutsIfmapTraffic) {
  // Memory-bound under ifmap streaming: ConvR reloads the ifmap once per
  // phase, ILAR loads it once.
  const LayerSpec l = make_layer(LayerKind::kDeconv, {3, 3}, 16, 2, {4, 4});
  const SubKernelSet set = decompose_shape(l.kernel);
  const HardwareConfig hw = make_hw(16, 400, 1.0);
  const auto c = compare_modes(l, &set, hw, true);
  EXPECT_LT(c.ilar.ifmap_traffic, c.convr.ifmap_traffic);
  EXPECT_LE(c.ilar.total, c.convr.total);
  // Report fields are the model's own totals.
  EXPECT_EQ(c.ilar.total, total_latency(c.ilar_schedule, l, &set, hw).total);
}

}  // namespace
}  // namespace stereoaccel
