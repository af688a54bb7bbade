#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "rubix/common.hpp"
#include "rubix/tracking.hpp"

using namespace rubix;

TEST(MisraGries, SignalsAtThresholdAndResets) {
  MisraGries mg(4, 3);
  EXPECT_FALSE(mg.insert(7));
  EXPECT_FALSE(mg.insert(7));
  EXPECT_TRUE(mg.insert(7));
  EXPECT_EQ(mg.estimate(7), 0u);
  EXPECT_FALSE(mg.insert(7));
  EXPECT_EQ(mg.estimate(7), 1u);
}

TEST(MisraGries, FullTableDecrementsAll) {
  MisraGries mg(2, 100);
  mg.insert(1);
  mg.insert(1);
  mg.insert(2);
  EXPECT_FALSE(mg.insert(3));  // table full: everyone loses one
  EXPECT_EQ(mg.decrements(), 1u);
  EXPECT_EQ(mg.estimate(1), 1u);
  EXPECT_EQ(mg.estimate(2), 0u);
  EXPECT_EQ(mg.estimate(3), 0u);
  EXPECT_EQ(mg.resident(), 1u);
  mg.insert(3);
  EXPECT_EQ(mg.estimate(3), 1u);
}

TEST(MisraGries, ZeroedSlotIsReused) {
  MisraGries mg(2, 2);
  mg.insert(1);
  EXPECT_TRUE(mg.insert(1));
  mg.insert(2);
  EXPECT_FALSE(mg.insert(3));  // slot of row 1 (estimate 0) is taken, no decrement
  EXPECT_EQ(mg.decrements(), 0u);
  EXPECT_EQ(mg.estimate(3), 1u);
  EXPECT_EQ(mg.estimate(2), 1u);
}

TEST(MisraGries, InvalidParameters) {
  EXPECT_THROW(MisraGries(0, 4), ConfigError);
  EXPECT_THROW(MisraGries(4, 0), ConfigError);
  EXPECT_THROW(PerRowTracker(4, 0), ConfigError);
}

// Estimate never exceeds the true count since the last signal, and undercounts
// by at most inserts / (capacity + 1).
TEST(MisraGries, ErrorBoundAgainstExactCounts) {
  Rng rng(11);
  MisraGries mg(16, 1'000'000);
  std::map<std::uint64_t, std::uint64_t> exact;
  for (int i = 0; i < 20000; ++i) {
    const std::uint64_t row = uniform_below(rng, 4) == 0 ? uniform_below(rng, 4) : uniform_below(rng, 500);
    mg.insert(row);
    ++exact[row];
  }
  for (const auto& [row, n] : exact) {
    EXPECT_LE(mg.estimate(row), n);
    EXPECT_GE(mg.estimate(row) + mg.inserts() / 17, n);
  }
}

TEST(MisraGries, ResetClearsState) {
  MisraGries mg(2, 5);
  mg.insert(1);
  mg.reset();
  EXPECT_TRUE(mg.empty());
  EXPECT_EQ(mg.inserts(), 0u);
  EXPECT_EQ(mg.estimate(1), 0u);
}

TEST(PerRow, SignalsAtEveryMultiple) {
  PerRowTracker t(8, 3);
  std::vector<int> sig;
  for (int i = 1; i <= 9; ++i)
    if (t.insert(2)) sig.push_back(i);
  EXPECT_EQ(sig, (std::vector<int>{3, 6, 9}));
  EXPECT_EQ(t.count(2), 9u);
  t.reset();
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(t.count(2), 0u);
  EXPECT_THROW(t.insert(8), std::out_of_range);
}

TEST(Thresholds, HalfAndThird) {
  EXPECT_EQ(TrackerThreshold::half(128).tracker_threshold, 64u);
  EXPECT_EQ(TrackerThreshold::third(1024).tracker_threshold, 341u);
  EXPECT_EQ(TrackerThreshold::half(1).tracker_threshold, 1u);
}

TEST(Capacity, SlackAtMostHalfThreshold) {
  EXPECT_EQ(default_mg_capacity(1'422'223, 64), 44445u);
  for (std::uint64_t thr : {1u, 2u, 64u, 341u}) {
    const auto cap = default_mg_capacity(100000, thr);
    EXPECT_LE(100000 / cap, std::max<std::uint64_t>(1, thr / 2));
  }
}

TEST(Guarantee, RandomAndAdversarialStreams) {
  Rng rng(3);
  std::vector<std::uint64_t> trace;
  for (int i = 0; i < 50000; ++i) trace.push_back(uniform_below(rng, 2000));
  EXPECT_TRUE(tracker_guarantee_check(trace, 64, 32).ok);
  // Many distinct rows interleaved with one hammered row.
  trace.clear();
  for (int i = 0; i < 50000; ++i) trace.push_back(i % 8 == 0 ? 999999 : static_cast<std::uint64_t>(i));
  const auto rep = tracker_guarantee_check(trace, 64, 32);
  EXPECT_TRUE(rep.ok);
  EXPECT_EQ(rep.bound, 32u + 50000 / 64);
}
