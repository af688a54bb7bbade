#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rubix/dram.hpp"
#include "rubix/workloads.hpp"

using namespace rubix;

namespace {
KernelSpec spec(KernelKind k, std::uint64_t bytes, std::uint64_t n) {
  KernelSpec s;
  s.kind = k;
  s.footprint_bytes = bytes;
  s.access_count = n;
  return s;
}
}  // namespace

TEST(Kernels, StreamWrapsFootprint) {
  const auto t = gen_stream(spec(KernelKind::random, 64 * 100, 250));
  ASSERT_EQ(t.size(), 250u);
  for (std::size_t i = 0; i < t.size(); ++i) ASSERT_EQ(t[i].line, i % 100);
  EXPECT_EQ(t[0].arrival_ns, 0u);
}

TEST(Kernels, StrideVisitsEveryLineOncePerStridePasses) {
  auto s = spec(KernelKind::stride, 64 * 1024, 1024);
  s.stride_lines = 64;
  const auto t = gen_kernel(s);
  EXPECT_EQ(t[0].line, 0u);
  EXPECT_EQ(t[1].line, 64u);
  EXPECT_EQ(t[16].line, 1u);
  std::set<std::uint64_t> lines;
  for (const auto& r : t) lines.insert(r.line);
  EXPECT_EQ(lines.size(), 1024u);
}

TEST(Kernels, RandomIsUniformAndSeeded) {
  auto s = spec(KernelKind::random, 64 * 16, 160000);
  const auto a = gen_kernel(s), b = gen_kernel(s);
  EXPECT_EQ(a, b);
  s.seed = 2;
  EXPECT_NE(a, gen_kernel(s));
  std::map<std::uint64_t, int> hist;
  for (const auto& r : a) ++hist[r.line];
  ASSERT_EQ(hist.size(), 16u);
  for (const auto& [l, n] : hist) EXPECT_NEAR(n, 10000, 5 * std::sqrt(10000.0)) << l;
}

TEST(Kernels, Validation) {
  const Geometry g = Geometry::test16();
  EXPECT_THROW(spec(KernelKind::stream, 32, 10).validate(g), ConfigError);
  EXPECT_THROW(spec(KernelKind::stream, 64 * (g.total_lines() + 1), 10).validate(g), ConfigError);
  EXPECT_THROW(spec(KernelKind::stream, 6400, 0).validate(g), ConfigError);
  auto s = spec(KernelKind::stride, 64 * 100, 10);
  s.stride_lines = 64;
  EXPECT_THROW(s.validate(g), ConfigError);
  EXPECT_THROW(parse_kernel_kind("zigzag"), ConfigError);
}

TEST(Attacks, DoubleSidedTargetsNeighbours) {
  const Geometry g = Geometry::baseline();
  const AddressMap m(g, StaticScheme::coffee_lake);
  AttackSpec a;
  a.kind = AttackKind::double_sided;
  a.bank = 3;
  a.row = 500;
  a.epochs = 1;
  const TimingParams t;
  AttackSource src(a, m, 128, t.refresh_interval, t.t_rc);
  ASSERT_EQ(src.cycle().size(), 2u);
  EXPECT_EQ(m.map({src.cycle()[0]}).row, 499u);
  EXPECT_EQ(m.map({src.cycle()[1]}).row, 501u);
  EXPECT_EQ(m.map({src.cycle()[1]}).bank, 3u);
  // Each aggressor reaches 2 * T_RH accesses within the window.
  const auto recs = drain(src);
  EXPECT_NEAR(static_cast<double>(recs.size()), 2 * 256, 2);
  EXPECT_LT(recs.back().arrival_ns, 64'000'000u);
}

TEST(Attacks, HalfDoubleCycle) {
  const Geometry g = Geometry::baseline();
  const AddressMap m(g, StaticScheme::linear);
  AttackSpec a;
  a.kind = AttackKind::half_double;
  a.row = 1000;
  a.near_interval = 4;
  const TimingParams t;
  AttackSource src(a, m, 128, t.refresh_interval, t.t_rc);
  ASSERT_EQ(src.cycle().size(), 9u);
  EXPECT_EQ(m.map({src.cycle()[0]}).row, 1000u);
  EXPECT_EQ(m.map({src.cycle()[8]}).row, 1001u);
  EXPECT_EQ(a.effective_intensity(128), 12800u);
}

TEST(Attacks, RejectsImpossibleRates) {
  const Geometry g = Geometry::test16();
  const AddressMap m(g, StaticScheme::linear);
  AttackSpec a;
  a.row = 3;
  a.intensity = 10'000'000;
  const TimingParams t;
  EXPECT_THROW(AttackSource(a, m, 128, t.refresh_interval, t.t_rc), ConfigError);
  a.intensity = 0;
  a.row = g.rows_per_bank;
  EXPECT_THROW(AttackSource(a, m, 128, t.refresh_interval, t.t_rc), ConfigError);
  EXPECT_THROW(parse_attack_kind("triple"), ConfigError);
}

TEST(Trace, RoundTrip) {
  const std::vector<TraceRecord> recs = {{0, 0x1A2B, Op::read}, {5, 0, Op::write}, {5, 0xFFFFFFF, Op::read}};
  std::stringstream ss;
  write_trace(ss, recs);
  EXPECT_EQ(ss.str().substr(0, 11), "0,0x1A2B,R\n");
  EXPECT_EQ(parse_trace(ss), recs);
}

TEST(Trace, CommentsAndWhitespace) {
  std::istringstream in("# header\n\n 100 , 0x10 , w # tail\r\n200,0X20,R\n");
  const auto t = parse_trace(in);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (TraceRecord{100, 0x10, Op::write}));
  EXPECT_EQ(t[1].line, 0x20u);
}

TEST(Trace, MalformedLinesReportLineNumber) {
  for (const char* bad : {"1,0x10\n", "1,0x10,R,4\n", "x,0x10,R\n", "1,16,R\n", "1,0xZZ,R\n", "1,0x10,Q\n"}) {
    std::istringstream in(std::string("0,0x1,R\n") + bad);
    try {
      parse_trace(in, "t.csv");
      ADD_FAILURE() << bad;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("t.csv:2"), std::string::npos) << e.what();
    }
  }
}

TEST(Trace, NonMonotoneArrivalRejected) {
  std::istringstream in("10,0x1,R\n5,0x2,R\n");
  EXPECT_THROW(parse_trace(in), ValidationError);
  EXPECT_THROW(parse_trace(std::string("/nonexistent/trace.csv")), IoError);
}
