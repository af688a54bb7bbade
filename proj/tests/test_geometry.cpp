#include <gtest/gtest.h>

#include <map>
#include <set>
#include <tuple>

#include "rubix/geometry.hpp"

using namespace rubix;

namespace {

const Geometry kIll = Geometry::illustration();
const Geometry kBase = Geometry::baseline();
const Geometry kTest = Geometry::test16();

auto bank_row(const PhysicalLocation& l) { return std::tuple{l.channel, l.bank, l.row}; }

}  // namespace

TEST(Geometry, BaselineShape) {
  EXPECT_EQ(kBase.line_addr_bits(), 28u);
  EXPECT_EQ(kBase.total_lines() * 64, 16ull << 30);
  EXPECT_EQ(kBase.row_size_lines, 128u);
  EXPECT_EQ(kTest.total_lines(), 1u << 16);
  EXPECT_NO_THROW(kBase.validate());
  EXPECT_THROW((Geometry{1, 3, 8, 128}.validate()), ConfigError);
}

TEST(Linear, Examples) {
  EXPECT_EQ(map_linear({0}, kIll), (PhysicalLocation{0, 0, 0, 0}));
  EXPECT_EQ(map_linear({63}, kIll), (PhysicalLocation{0, 0, 0, 63}));
  EXPECT_EQ(map_linear({64}, kIll), (PhysicalLocation{0, 0, 1, 0}));
  std::set<std::uint64_t> rows;
  for (std::uint64_t v = 0; v < 65536; ++v) rows.insert(map_linear({v}, kIll).row);
  EXPECT_EQ(rows.size(), 1024u);
}

TEST(Linear, OutOfRange) {
  EXPECT_THROW(map_linear({kIll.total_lines()}, kIll), AddressRangeError);
  EXPECT_THROW(map_coffee_lake({kBase.total_lines()}, kBase), AddressRangeError);
  EXPECT_THROW(map_skylake({kBase.total_lines() + 5}, kBase), AddressRangeError);
  EXPECT_THROW(map_mop({~0ull >> 1}, kBase), AddressRangeError);
}

TEST(CoffeeLake, ConsecutiveLinesShareRow) {
  EXPECT_EQ(bank_row(map_coffee_lake({0}, kBase)), bank_row(map_coffee_lake({127}, kBase)));
  EXPECT_NE(bank_row(map_coffee_lake({0}, kBase)), bank_row(map_coffee_lake({128}, kBase)));
  // Two consecutive 4 KB pages.
  EXPECT_EQ(bank_row(map_coffee_lake({0}, kBase)), bank_row(map_coffee_lake({64}, kBase)));
}

TEST(CoffeeLake, BankHashSpreadsRows) {
  // Same bank bits, different row: the hash moves the bank.
  const auto a = map_coffee_lake({0}, kBase);
  const auto b = map_coffee_lake({128ull * 16}, kBase);
  EXPECT_EQ(b.row, a.row + 1);
  EXPECT_NE(a.bank, b.bank);
}

TEST(Skylake, PairsAndPages) {
  EXPECT_EQ(bank_row(map_skylake({0}, kBase)), bank_row(map_skylake({1}, kBase)));
  EXPECT_NE(map_skylake({0}, kBase).bank, map_skylake({2}, kBase).bank);
  for (std::uint64_t v : {1, 4, 5, 60, 61}) EXPECT_EQ(bank_row(map_skylake({0}, kBase)), bank_row(map_skylake({v}, kBase)));
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, int> per_row;
  for (std::uint64_t v = 64 * 7; v < 64 * 8; ++v) ++per_row[bank_row(map_skylake({v}, kBase))];
  ASSERT_EQ(per_row.size(), 2u);
  for (const auto& [_, n] : per_row) EXPECT_EQ(n, 32);
}

TEST(Mop, FourLineChunks) {
  for (std::uint64_t v = 1; v < 4; ++v) EXPECT_EQ(bank_row(map_mop({0}, kBase)), bank_row(map_mop({v}, kBase)));
  EXPECT_EQ(map_mop({4}, kBase).bank, (map_mop({0}, kBase).bank + 1) % kBase.banks_per_channel);
  for (std::uint64_t page : {0, 3, 1000}) {
    std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, int> per_row;
    for (std::uint64_t v = page * 64; v < page * 64 + 64; ++v) ++per_row[bank_row(map_mop({v}, kBase))];
    for (const auto& [_, n] : per_row) EXPECT_EQ(n, 4);
  }
}

class StaticBijection : public ::testing::TestWithParam<StaticScheme> {};

TEST_P(StaticBijection, ExhaustiveAndInverse) {
  const auto s = GetParam();
  const auto r = verify_bijection([&](LineAddress l) { return map_static(s, l, kTest); }, kTest);
  EXPECT_TRUE(r.ok);
  for (std::uint64_t v = 0; v < kTest.total_lines(); ++v)
    ASSERT_EQ(unmap_static(s, map_static(s, {v}, kTest), kTest).value, v);
}

TEST_P(StaticBijection, MultiChannelInverse) {
  const Geometry g{4, 4, 64, 128};
  const auto s = GetParam();
  EXPECT_TRUE(verify_bijection([&](LineAddress l) { return map_static(s, l, g); }, g).ok);
  // Channel stripes of 4 lines.
  EXPECT_EQ(map_static(s, {0}, g).channel, map_static(s, {3}, g).channel);
  EXPECT_NE(map_static(s, {0}, g).channel, map_static(s, {4}, g).channel);
}

INSTANTIATE_TEST_SUITE_P(All, StaticBijection,
                         ::testing::Values(StaticScheme::linear, StaticScheme::coffee_lake, StaticScheme::skylake,
                                           StaticScheme::mop),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Bijection, LinearOnIllustrationGeometryIsTooLargeToScan) {
  EXPECT_THROW(verify_bijection([](LineAddress l) { return map_linear(l, kIll); }, kIll), ConfigError);
}

TEST(Bijection, LinearOnSmallIllustrationShape) {
  const Geometry g{1, 1, 1 << 10, 64};
  EXPECT_TRUE(verify_bijection([&](LineAddress l) { return map_linear(l, g); }, g).ok);
}

TEST(Bijection, BrokenSchemeReportsCounterexample) {
  const auto r = verify_bijection([](LineAddress l) { return PhysicalLocation{0, 0, 0, l.value & 1}; }, kTest);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.counterexample);
  EXPECT_EQ(r.counterexample->first.value, 0u);
  EXPECT_EQ(r.counterexample->second.value, 2u);
}

TEST(Bijection, OutOfRangeImageIsCaught) {
  const auto r = verify_bijection([](LineAddress l) { return PhysicalLocation{0, 0, 1000, l.value & 127}; }, kTest);
  EXPECT_FALSE(r.ok);
}

TEST(StaticScheme, ParseNames) {
  EXPECT_EQ(parse_static_scheme("coffeelake"), StaticScheme::coffee_lake);
  EXPECT_EQ(parse_static_scheme("skylake"), StaticScheme::skylake);
  EXPECT_EQ(parse_static_scheme("mop"), StaticScheme::mop);
  EXPECT_EQ(parse_static_scheme("linear"), StaticScheme::linear);
  EXPECT_THROW(parse_static_scheme("haswell"), ConfigError);
}
