#pragma once

// Canned experiments: the illustration table, the named verification suites
// and threshold/mapping sweeps. Shared by the command-line tool and tests.

#include <array>
#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rubix/config.hpp"

namespace rubix {

// ---- illustration ----

inline constexpr std::array<KernelKind, 3> kIllustrationKernels = {KernelKind::stream, KernelKind::stride,
                                                                   KernelKind::random};

struct IllustrationCell {
  KernelKind kernel;
  std::string mapping;
  SimReport report;
};

struct IllustrationResult {
  std::uint64_t footprint_rows = 0;
  std::vector<IllustrationCell> cells;  // linear x 3 kernels, then encrypted x 3 kernels
  ScatterCensus census;
  std::vector<std::uint64_t> census_seeds;

  const IllustrationCell& cell(std::string_view mapping, KernelKind k) const {
    for (const auto& c : cells)
      if (c.mapping == mapping && c.kernel == k) return c;
    throw ConfigError("no illustration cell for " + std::string(mapping));
  }
};

/// 4 MB footprint on a single-bank 4 GB memory with 4 KB rows; 1M accesses per
/// kernel; row buffer left open without an access cap.
inline RunConfig illustration_config(KernelKind kernel, const MappingConfig& mapping, std::uint64_t seed) {
  RunConfig rc;
  rc.sim.geometry = Geometry::illustration();
  rc.sim.policy = PagePolicy::open_uncapped;
  rc.sim.mapping = mapping;
  rc.sim.hot_row_thresholds = {kHotRowThreshold};
  rc.workload.kind = WorkloadKind::kernel;
  rc.workload.kernel.kind = kernel;
  rc.workload.kernel.footprint_bytes = 4ull << 20;
  rc.workload.kernel.access_count = 1'000'000;
  rc.workload.kernel.stride_lines = kPageLines;
  set_seed(rc, seed);
  return rc;
}

inline MappingConfig illustration_linear() {
  MappingConfig m;
  m.scheme = StaticScheme::linear;
  return m;
}

inline MappingConfig illustration_encrypted() {
  MappingConfig m;
  m.kind = MappingKind::rubix_s;
  m.gang_size = 1;
  m.scheme = StaticScheme::linear;
  return m;
}

inline IllustrationResult run_illustration(std::uint64_t seed = kDefaultSeed) {
  IllustrationResult out;
  const Geometry g = Geometry::illustration();
  const std::uint64_t footprint_lines = (4ull << 20) / kLineBytes;
  out.footprint_rows = footprint_lines / g.row_size_lines;
  for (const auto& m : {illustration_linear(), illustration_encrypted()})
    for (auto k : kIllustrationKernels) out.cells.push_back({k, m.name(), run_scenario(illustration_config(k, m, seed))});
  for (std::uint64_t s = 1; s <= 10; ++s) out.census_seeds.push_back(s);
  out.census = scatter_census(footprint_lines, 1, StaticScheme::linear, g, out.census_seeds);
  return out;
}

inline void print_illustration(std::ostream& os, const IllustrationResult& r) {
  os << "hot rows (>= " << kHotRowThreshold << " activations), 4MB footprint, 4KB rows, 1M accesses\n";
  os << "kernel    linear  encrypted  act/row(linear)  stdev(linear)\n";
  for (auto k : kIllustrationKernels) {
    const auto& lin = r.cell(illustration_linear().name(), k).report;
    const auto& enc = r.cell(illustration_encrypted().name(), k).report;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-8s %7llu %10llu %16.2f %14.2f\n", std::string(to_string(k)).c_str(),
                  static_cast<unsigned long long>(lin.hot_rows_at(kHotRowThreshold)),
                  static_cast<unsigned long long>(enc.hot_rows_at(kHotRowThreshold)), lin.activations_per_row.mean,
                  lin.activations_per_row.stdev);
    os << buf;
  }
  os << "scatter census, " << r.census_seeds.size() << " seeds (rows holding k lines of the footprint)\n";
  for (std::size_t k = 1; k < r.census.mean.size(); ++k) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  k=%zu  mean %.1f  stdev %.1f\n", k, r.census.mean[k], r.census.stdev[k]);
    os << buf;
  }
}

// ---- verification suites ----

struct SuiteResult {
  std::string suite;
  bool passed = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    passed = passed && ok;
    lines.push_back((ok ? "ok    " : "FAIL  ") + what);
  }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"bijection", "rubixd-permutation", "security", "tracker"};
  return names;
}

/// Every static mapping and Rubix-S at GS 1/2/4, exhaustively on 2^16 lines.
inline SuiteResult verify_bijection_suite(std::uint64_t seed = kDefaultSeed) {
  SuiteResult res{"bijection"};
  const Geometry g = Geometry::test16();
  for (auto s : {StaticScheme::linear, StaticScheme::coffee_lake, StaticScheme::skylake, StaticScheme::mop}) {
    const AddressMap m(g, s);
    const auto r = verify_bijection(m, g);
    res.check(r.ok, std::string(to_string(s)) + " bijective over " + std::to_string(g.total_lines()) + " lines");
  }
  for (std::uint64_t gs : {1, 2, 4}) {
    const AddressMap m(g, make_rubix_s(g, gs, derive_seed(seed, kSeedTagCipher), StaticScheme::coffee_lake));
    const auto r = verify_bijection(m, g);
    res.check(r.ok, "rubix-s:gs" + std::to_string(gs) + " bijective over " + std::to_string(g.total_lines()) + " lines");
  }
  return res;
}

/// Translate is a permutation of [0, 2^m) for random (keys, ptr) states.
inline bool remap_state_is_permutation(const RemapState& s) {
  std::vector<char> seen(s.size(), 0);
  for (std::uint64_t r = 0; r < s.size(); ++r) {
    const auto t = translate_row(s, r);
    if (t >= s.size() || seen[t]) return false;
    seen[t] = 1;
  }
  return true;
}

inline SuiteResult verify_rubixd_permutation_suite(std::uint64_t seed = kDefaultSeed, std::uint64_t states = 1000) {
  SuiteResult res{"rubixd-permutation"};
  Rng rng(derive_seed(seed, kSeedTagRubixD));
  std::uint64_t bad = 0;
  for (std::uint64_t i = 0; i < states; ++i) {
    RemapState s;
    s.bits = 1 + static_cast<unsigned>(uniform_below(rng, 12));
    s.curr_key = rng() & low_mask(s.bits);
    s.next_key = draw_nonzero_key(rng, s.bits);
    s.ptr = uniform_below(rng, s.size() + 1);
    if (!remap_state_is_permutation(s)) ++bad;
  }
  res.check(bad == 0, std::to_string(states - bad) + "/" + std::to_string(states) + " random states permute (m <= 12)");

  // Whole-epoch walk: the mapping stays a permutation after every episode and
  // lands on curr ^ next at the end.
  RemapState s{0b0101, 0b0011, 0, 4};
  const RemapState start = s;
  bool ok = true;
  while (!s.epoch_done()) {
    remap_step(s, 4);
    ok = ok && remap_state_is_permutation(s);
  }
  for (std::uint64_t r = 0; r < s.size(); ++r) ok = ok && translate_row(s, r) == (r ^ start.curr_key ^ start.next_key);
  res.check(ok, "full epoch walk stays a permutation and ends at curr ^ next");
  return res;
}

struct SecurityOptions {
  std::vector<std::uint64_t> t_rh = {128, 256, 1024};
  std::vector<MitigationScheme> schemes = {MitigationScheme::aqua, MitigationScheme::srs, MitigationScheme::blockhammer};
  std::vector<AttackKind> attacks = {AttackKind::single, AttackKind::double_sided, AttackKind::many_sided,
                                     AttackKind::half_double, AttackKind::flush_reload};
  std::uint64_t epochs = 100;
  bool negative_control = true;  // victim refresh under Half-Double must flip
  std::uint64_t seed = kDefaultSeed;
};

inline RunConfig security_config(MitigationScheme scheme, AttackKind attack, std::uint64_t t_rh, std::uint64_t epochs,
                                 std::uint64_t seed) {
  RunConfig rc;
  rc.sim.mitigation.scheme = scheme;
  rc.sim.mitigation.t_rh = t_rh;
  rc.sim.line_attribution = false;
  rc.workload.kind = WorkloadKind::attack;
  rc.workload.attack.kind = attack;
  rc.workload.attack.epochs = epochs;
  set_seed(rc, seed);
  return rc;
}

inline std::string describe_flip(const Flip& f) {
  return "epoch " + std::to_string(f.epoch) + " bank " + std::to_string(f.flat_bank) + " row " + std::to_string(f.row) +
         " count " + std::to_string(f.count);
}

inline SuiteResult verify_security_suite(const SecurityOptions& opt = {}) {
  SuiteResult res{"security"};
  for (auto scheme : opt.schemes)
    for (auto t : opt.t_rh)
      for (auto a : opt.attacks) {
        const auto rep = run_scenario(security_config(scheme, a, t, opt.epochs, opt.seed));
        std::string what = std::string(to_string(scheme)) + " t_rh=" + std::to_string(t) + " " +
                           std::string(to_string(a)) + ": " + std::to_string(rep.flips.size()) + " flips over " +
                           std::to_string(rep.epochs.size()) + " epochs";
        if (!rep.flips.empty()) what += " (first: " + describe_flip(rep.flips.front()) + ")";
        res.check(rep.flips.empty() && rep.epochs.size() >= opt.epochs, what);
      }
  if (opt.negative_control) {
    for (auto t : opt.t_rh) {
      if (t > 256) continue;  // too few induced activations per window to cross larger thresholds
      const auto rep =
          run_scenario(security_config(MitigationScheme::victim_refresh, AttackKind::half_double, t, opt.epochs, opt.seed));
      std::string what = "negative control victim_refresh t_rh=" + std::to_string(t) +
                         " half_double: " + std::to_string(rep.flips.size()) + " flips expected > 0";
      if (!rep.flips.empty()) what += " (first: " + describe_flip(rep.flips.front()) + ")";
      res.check(!rep.flips.empty(), what);
    }
  }
  return res;
}

/// 100 random and adversarial streams against an exact counter.
inline SuiteResult verify_tracker_suite(std::uint64_t seed = kDefaultSeed) {
  SuiteResult res{"tracker"};
  Rng rng(derive_seed(seed, kSeedTagMitigation));
  std::uint64_t escaped = 0, streams = 0;
  auto run = [&](const std::vector<std::uint64_t>& trace, std::size_t cap, std::uint64_t thr) {
    const auto rep = tracker_guarantee_check(trace, cap, thr);
    escaped += rep.escaped.size();
    ++streams;
  };
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t rows = 16 + uniform_below(rng, 4096);
    const std::size_t n = 2000 + uniform_below(rng, 20000);
    const std::size_t cap = 4 + uniform_below(rng, 64);
    const std::uint64_t thr = 8 + uniform_below(rng, 256);
    std::vector<std::uint64_t> tr(n);
    // Skewed: half the draws hit a small hot set.
    for (auto& r : tr) r = bernoulli(rng, 0.5) ? uniform_below(rng, 8) : uniform_below(rng, rows);
    run(tr, cap, thr);
  }
  for (int i = 0; i < 50; ++i) {
    const std::size_t cap = 4 + uniform_below(rng, 32);
    const std::uint64_t thr = 8 + uniform_below(rng, 128);
    std::vector<std::uint64_t> tr;
    switch (i % 5) {
      case 0:  // cap+1 rows round-robin: every insert of a new row decrements all
        for (int k = 0; k < 20000; ++k) tr.push_back(static_cast<std::uint64_t>(k) % (cap + 1));
        break;
      case 1:  // one target interleaved with a flood of distinct decoys
        for (int k = 0; k < 20000; ++k) tr.push_back(k % 2 ? 0 : 1000 + static_cast<std::uint64_t>(k));
        break;
      case 2:  // target kept just under the threshold, then bursts
        for (int k = 0; k < 20000; ++k) tr.push_back(k % 97 == 0 ? 0 : 1 + static_cast<std::uint64_t>(k % (3 * cap)));
        break;
      case 3:  // many aggressors each at threshold - 1 before reuse
        for (std::uint64_t a = 0; a < 4 * cap; ++a)
          for (std::uint64_t k = 0; k + 1 < thr; ++k) tr.push_back(a);
        for (int k = 0; k < 5000; ++k) tr.push_back(static_cast<std::uint64_t>(k) % (4 * cap));
        break;
      case 4:  // random permutation bursts of a fixed row set
        for (int round = 0; round < 200; ++round) {
          std::vector<std::uint64_t> rows(2 * cap);
          for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
          std::shuffle(rows.begin(), rows.end(), rng);
          tr.insert(tr.end(), rows.begin(), rows.end());
        }
        break;
    }
    run(tr, cap, thr);
  }
  res.check(escaped == 0,
            std::to_string(streams) + " streams, " + std::to_string(escaped) + " rows escaped above the soundness bound");
  return res;
}

inline SuiteResult run_suite(std::string_view name, std::uint64_t seed, bool force_victim_refresh = false) {
  if (name == "bijection") return verify_bijection_suite(seed);
  if (name == "rubixd-permutation") return verify_rubixd_permutation_suite(seed);
  if (name == "security") {
    SecurityOptions opt;
    opt.seed = seed;
    if (force_victim_refresh) {
      opt.schemes = {MitigationScheme::victim_refresh};
      opt.negative_control = false;
    }
    return verify_security_suite(opt);
  }
  if (name == "tracker") return verify_tracker_suite(seed);
  throw ConfigError("unknown suite '" + std::string(name) + "'");
}

// ---- sweeps ----

inline std::vector<std::uint64_t> parse_uint_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const auto comma = s.find(',', pos);
    const auto tok = s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || p != tok.data() + tok.size())
      throw ConfigError("bad number '" + std::string(tok) + "' in list");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (!s.empty()) {
    const auto comma = s.find(',', pos);
    out.emplace_back(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos));
    if (out.back().empty()) throw ConfigError("empty item in list");
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct SweepCell {
  std::string mapping;
  std::uint64_t t_rh = 0;
  SimReport report;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // mapping-major, t_rh in the given order
  std::vector<ComparisonRow> comparison;

  const SweepCell& at(std::string_view mapping, std::uint64_t t_rh) const {
    for (const auto& c : cells)
      if (c.mapping == mapping && c.t_rh == t_rh) return c;
    throw ConfigError("no sweep cell " + std::string(mapping) + "/" + std::to_string(t_rh));
  }
};

/// Cross product of thresholds and mappings over the base config. Comparison
/// ratios are relative to the first cell.
inline SweepResult run_sweep(const RunConfig& base, const std::vector<std::uint64_t>& t_rh,
                             const std::vector<std::string>& mappings,
                             const std::function<void(const SweepCell&)>& progress = {}) {
  if (t_rh.empty()) throw ConfigError("sweep needs at least one t_rh value");
  if (mappings.empty()) throw ConfigError("sweep needs at least one mapping");
  std::vector<RunConfig> cfgs;
  for (const auto& m : mappings) {
    const MappingConfig parsed = MappingConfig::parse(m);
    for (auto t : t_rh) {
      RunConfig rc = base;
      rc.sim.mapping.kind = parsed.kind;
      rc.sim.mapping.gang_size = parsed.gang_size;
      rc.sim.mapping.rubix_d.gang_size = parsed.rubix_d.gang_size;
      if (parsed.kind == MappingKind::static_map) rc.sim.mapping.scheme = parsed.scheme;
      rc.sim.mitigation.t_rh = t;
      rc.validate();
      cfgs.push_back(std::move(rc));
    }
  }
  SweepResult out;
  std::vector<SimReport> reports;
  for (const auto& rc : cfgs) {
    SweepCell cell{rc.sim.mapping.name(), rc.sim.mitigation.t_rh, run_scenario(rc)};
    if (progress) progress(cell);
    reports.push_back(cell.report);
    out.cells.push_back(std::move(cell));
  }
  out.comparison = compare_runs(reports, 0);
  return out;
}

}  // namespace rubix
