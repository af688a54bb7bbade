#include <gtest/gtest.h>

#include <vector>

#include "rubix/dram.hpp"

using namespace rubix;

namespace {
Dram make(PagePolicy p = PagePolicy::open_adaptive) { return Dram(Geometry::test16(), TimingParams{}, p); }
}  // namespace

TEST(Dram, AdaptivePolicyClosesAfterSixteen) {
  auto d = make();
  int acts = 0;
  for (int i = 0; i < 64; ++i) acts += d.access(0, 3, 7, i * 100).caused_activation;
  EXPECT_EQ(acts, 4);
  EXPECT_EQ(d.window().count(d.row_index(3, 7)), 4u);
}

TEST(Dram, UncappedPolicyKeepsRowOpen) {
  auto d = make(PagePolicy::open_uncapped);
  int acts = 0;
  for (int i = 0; i < 64; ++i) acts += d.access(0, 3, 7, i * 100).caused_activation;
  EXPECT_EQ(acts, 1);
}

TEST(Dram, ActivationsSpacedByRowCycle) {
  auto d = make();
  const auto t = d.timing();
  Tick prev = -1;
  for (int i = 0; i < 20; ++i) {
    const auto r = d.access(0, 0, static_cast<std::uint64_t>(i % 2), 0);
    ASSERT_TRUE(r.caused_activation);
    if (prev >= 0) EXPECT_GE(r.activation_time - prev, t.t_rc);
    prev = r.activation_time;
  }
}

TEST(Dram, HitAndMissLatency) {
  auto d = make();
  const auto t = d.timing();
  const auto first = d.access(0, 0, 1, 0);
  EXPECT_EQ(first.completion_time, t.t_rcd + t.t_cl);
  const auto hit = d.access(0, 0, 1, 1000);
  EXPECT_TRUE(hit.hit);
  EXPECT_EQ(hit.completion_time, 1000 + t.t_cl);
  const auto conflict = d.access(0, 0, 2, 10000);
  EXPECT_EQ(conflict.activation_time, 10000 + t.t_rp);
}

TEST(Dram, BanksAreIndependent) {
  auto d = make();
  const auto a = d.access(0, 0, 1, 0);
  const auto b = d.access(0, 1, 1, 0);
  EXPECT_EQ(a.activation_time, b.activation_time);
}

TEST(Dram, BlockChannelDelaysAndSerializes) {
  auto d = make();
  EXPECT_EQ(d.block_channel(0, 1000, 0), 1000);
  EXPECT_EQ(d.block_channel(0, 500, 200), 1500);
  const auto r = d.access(0, 2, 2, 10);
  EXPECT_GE(r.activation_time, 1500);
}

TEST(Dram, OccupyBankClosesRow) {
  auto d = make();
  d.access(0, 0, 1, 0);
  d.occupy_bank(0, 5000);
  EXPECT_FALSE(d.would_hit(0, 1));
  EXPECT_GE(d.access(0, 0, 1, 10).activation_time, 5000);
}

TEST(Dram, WindowBoundOnActivations) {
  TimingParams t;
  EXPECT_EQ(t.max_activations_per_window(), 64'000'000 * 10 / 450 + 1);
  t.t_rc = t.t_rcd;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.t_cl = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(ActivationWindowTest, ResetClearsTouched) {
  ActivationWindow w(8);
  w.increment(3);
  w.increment(3, 4);
  w.set(5, 2);
  EXPECT_EQ(w.count(3), 5u);
  EXPECT_EQ(w.touched().size(), 2u);
  w.reset(640);
  EXPECT_EQ(w.count(3), 0u);
  EXPECT_EQ(w.count(5), 0u);
  EXPECT_TRUE(w.touched().empty());
  EXPECT_EQ(w.window_start(), 640);
}

TEST(Schedule, FirstReadyThenOldest) {
  auto d = make();
  d.access(0, 0, 5, 0);
  std::vector<Request> q = {{0, 0, 0, 0, 9}, {1, 0, 0, 1, 3}, {2, 0, 0, 0, 5}};
  EXPECT_EQ(schedule(q, 100, d), 2u);  // row hit beats age
  q[2].row = 6;
  EXPECT_EQ(schedule(q, 100, d), 0u);
  q[0].arrival = 500;  // not yet arrived
  EXPECT_EQ(schedule(q, 100, d), 1u);
}

TEST(Schedule, NothingArrivedPicksEarliest) {
  auto d = make();
  std::vector<Request> q = {{0, 900, 0, 0, 1}, {1, 300, 0, 0, 2}};
  EXPECT_EQ(schedule(q, 0, d), 1u);
  EXPECT_THROW(schedule(std::span<const Request>{}, 0, d), StateError);
}
