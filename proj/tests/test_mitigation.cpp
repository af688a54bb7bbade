#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "rubix/mitigation.hpp"

using namespace rubix;

namespace {

MitigationConfig cfg(MitigationScheme s, std::uint64_t t_rh = 128) {
  MitigationConfig c;
  c.scheme = s;
  c.t_rh = t_rh;
  return c;
}

const Geometry kGeom = Geometry::test16();

}  // namespace

TEST(MitigationConfigTest, ThresholdsAndTrackers) {
  EXPECT_EQ(cfg(MitigationScheme::aqua).tracker_threshold(), 64u);
  EXPECT_EQ(cfg(MitigationScheme::srs, 1024).tracker_threshold(), 341u);
  EXPECT_EQ(cfg(MitigationScheme::blockhammer).tracker_kind(), TrackerKind::per_row);
  EXPECT_EQ(cfg(MitigationScheme::victim_refresh).tracker_kind(), TrackerKind::misra_gries);
  auto bad = cfg(MitigationScheme::blockhammer);
  bad.tracker = TrackerKind::misra_gries;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(cfg(MitigationScheme::aqua, 2).validate(), ConfigError);
  EXPECT_THROW(parse_mitigation_scheme("rfm"), ConfigError);
  EXPECT_EQ(parse_mitigation_scheme("vr"), MitigationScheme::victim_refresh);
}

TEST(Oracle, FirstCrossingPerEpoch) {
  BitFlipOracle o(32, 16, 10);
  for (int i = 0; i < 10; ++i) o.add(2, 5);
  EXPECT_TRUE(o.secure());
  o.add(2, 5);
  o.add(2, 5);
  ASSERT_EQ(o.flips().size(), 1u);
  EXPECT_EQ(o.flips()[0], (Flip{0, 2, 5, 11}));
  o.end_epoch();
  EXPECT_EQ(o.count(2, 5), 0u);
  o.add(2, 5, 20);
  EXPECT_EQ(o.flips().back().epoch, 1u);
}

TEST(Oracle, NeutralizeClearsDisturbance) {
  BitFlipOracle o(32, 1, 10);
  for (int i = 0; i < 10; ++i) o.add(0, 3);
  o.neutralize(0, 3);
  for (int i = 0; i < 10; ++i) o.add(0, 3);
  EXPECT_TRUE(o.secure());
  const std::vector<std::uint32_t> counts = {1, 11, 10, 12};
  EXPECT_EQ(flip_oracle_check(counts, 10), (std::vector<std::uint64_t>{1, 3}));
}

TEST(VictimRefresh, NeighboursAndEdges) {
  Mitigation m(cfg(MitigationScheme::victim_refresh), kGeom, TimingParams{});
  const auto mid = m.victim_refresh(4, 10);
  ASSERT_EQ(mid.induced.size(), 2u);
  EXPECT_EQ(mid.induced[0].row, 9u);
  EXPECT_EQ(mid.induced[1].row, 11u);
  EXPECT_TRUE(mid.neutralize_aggressor);
  EXPECT_EQ(mid.bank_block, 2 * TimingParams{}.t_rc);
  EXPECT_EQ(m.victim_refresh(0, 0).induced.size(), 1u);
  const auto top = m.victim_refresh(0, kGeom.rows_per_bank - 1);
  ASSERT_EQ(top.induced.size(), 1u);
  EXPECT_EQ(top.induced[0].row, kGeom.rows_per_bank - 2);
}

TEST(VictimRefresh, TriggersAtHalfThreshold) {
  Mitigation m(cfg(MitigationScheme::victim_refresh), kGeom, TimingParams{});
  Rng rng(1);
  int fired = 0;
  for (int i = 1; i <= 128; ++i)
    if (m.on_activation(3, 7, rng)) {
      ++fired;
      EXPECT_EQ(i % 64, 0);
    }
  EXPECT_EQ(fired, 2);
}

TEST(Aqua, MigratesIntoQuarantineAndDrains) {
  const Geometry g{1, 2, 200, 128};
  Mitigation m(cfg(MitigationScheme::aqua), g, TimingParams{});
  EXPECT_EQ(m.quarantine_rows(), 2u);
  EXPECT_EQ(m.physical_rows_per_bank(), 202u);
  const auto a = m.aqua_migrate(1, 17);
  EXPECT_EQ(a.kind, ActionKind::aqua_migration);
  EXPECT_EQ(*a.partner, 200u);
  EXPECT_EQ(m.locate(1, 17), (Mitigation::RowRef{1, 200}));
  EXPECT_FALSE(m.resident(1, 17));
  EXPECT_EQ(a.channel_block, 2 * TimingParams{}.t_rc + 256 * TimingParams{}.t_cas_op);
  m.aqua_migrate(1, 18);
  const auto full = m.aqua_migrate(1, 19);
  EXPECT_EQ(full.kind, ActionKind::quarantine_full);
  EXPECT_EQ(m.gate(1, 19, 999), Tick{999});
  EXPECT_FALSE(m.gate(1, 20, 999));
  m.end_epoch();
  EXPECT_EQ(m.locate(1, 17), (Mitigation::RowRef{1, 17}));
  EXPECT_FALSE(m.gate(1, 19, 999));
  EXPECT_EQ(m.aqua_migrate(1, 5).partner, std::optional<std::uint64_t>{200});
}

TEST(Srs, SwapIsConsistentAndMemoryWide) {
  Mitigation m(cfg(MitigationScheme::srs), kGeom, TimingParams{});
  Rng rng(4);
  std::map<std::uint64_t, int> partner_banks;
  for (int i = 0; i < 4000; ++i) {
    const auto bank = uniform_below(rng, kGeom.total_banks());
    const auto row = uniform_below(rng, kGeom.rows_per_bank);
    const auto a = m.srs_swap(bank, row, rng);
    ASSERT_TRUE(a.partner);
    EXPECT_FALSE(a.partner_bank == bank && *a.partner == row);
    ++partner_banks[a.partner_bank];
    EXPECT_EQ(a.induced.size(), 2u);
  }
  EXPECT_TRUE(m.indirection().consistent());
  EXPECT_EQ(partner_banks.size(), kGeom.total_banks());
  // Uniform over banks: each bank gets 250 +- a generous margin.
  for (const auto& [b, n] : partner_banks) EXPECT_NEAR(n, 250, 80) << b;
  // locate and resident are inverse.
  for (std::uint64_t b = 0; b < kGeom.total_banks(); ++b)
    for (std::uint64_t r = 0; r < kGeom.rows_per_bank; ++r) {
      const auto p = m.locate(b, r);
      const auto back = m.resident(p.flat_bank, p.row);
      ASSERT_TRUE(back);
      ASSERT_EQ(*back, (Mitigation::RowRef{b, r}));
    }
}

TEST(Srs, SwapAndSwapBackRestoresIdentity) {
  RowIndirection ind(1);
  ind.swap(0, 3, 9);
  EXPECT_EQ(ind.physical(0, 3), 9u);
  EXPECT_EQ(ind.logical(0, 3), std::optional<std::uint64_t>{9});
  ind.swap(0, 3, 9);
  EXPECT_EQ(ind.moved_rows(), 0u);
  EXPECT_TRUE(ind.consistent());
  ind.move(0, 4, 100);
  EXPECT_FALSE(ind.logical(0, 4));
  EXPECT_THROW(ind.move(0, 4, 101), StateError);
}

TEST(Blockhammer, QuotaStallsUntilWindowEnd) {
  Mitigation m(cfg(MitigationScheme::blockhammer), kGeom, TimingParams{});
  Rng rng(1);
  for (int i = 0; i < 63; ++i) {
    EXPECT_FALSE(m.gate(0, 9, 1000));
    EXPECT_FALSE(m.on_activation(0, 9, rng));
  }
  m.on_activation(0, 9, rng);
  EXPECT_EQ(m.gate(0, 9, 1000), Tick{1000});
  EXPECT_FALSE(m.gate(0, 10, 1000));
  m.end_epoch();
  EXPECT_TRUE(m.trackers_empty());
  EXPECT_FALSE(m.gate(0, 9, 1000));
}

TEST(NoMitigation, NeverActs) {
  Mitigation m(cfg(MitigationScheme::none), kGeom, TimingParams{});
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(m.on_activation(0, 1, rng));
  EXPECT_EQ(m.locate(3, 4), (Mitigation::RowRef{3, 4}));
}
