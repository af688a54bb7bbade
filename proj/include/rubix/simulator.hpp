#pragma once

// One deterministic simulation run: address mapping (static, Rubix-S or
// Rubix-D), the DRAM timing model, a Rowhammer mitigation and the flip oracle,
// driven by an access stream.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rubix/analytics.hpp"
#include "rubix/dram.hpp"
#include "rubix/geometry.hpp"
#include "rubix/mitigation.hpp"
#include "rubix/rubix_d.hpp"
#include "rubix/rubix_s.hpp"
#include "rubix/workloads.hpp"

namespace rubix {

enum class MappingKind { static_map, rubix_s, rubix_d };

struct MappingConfig {
  MappingKind kind = MappingKind::static_map;
  StaticScheme scheme = StaticScheme::coffee_lake;  // the mapping itself, or the base under Rubix
  std::uint64_t gang_size = 4;                      // Rubix-S
  RubixDConfig rubix_d;                             // Rubix-D

  /// Names used on the command line: coffeelake, skylake, mop, linear,
  /// rubix-s:gs4, rubix-d:gs4 (gang size 1, 2 or 4).
  static MappingConfig parse(std::string_view name) {
    MappingConfig m;
    auto gang = [&](std::string_view rest) -> std::uint64_t {
      if (rest.empty()) return 4;
      if (rest.substr(0, 3) != ":gs" || rest.size() != 4) throw ConfigError("bad gang suffix in '" + std::string(name) + "'");
      const std::uint64_t g = static_cast<std::uint64_t>(rest[3] - '0');
      check_gang_size(g);
      return g;
    };
    if (name.substr(0, 7) == "rubix-s") {
      m.kind = MappingKind::rubix_s;
      m.gang_size = gang(name.substr(7));
    } else if (name.substr(0, 7) == "rubix-d") {
      m.kind = MappingKind::rubix_d;
      m.rubix_d.gang_size = gang(name.substr(7));
    } else {
      m.scheme = parse_static_scheme(name);
    }
    return m;
  }

  std::string name() const {
    switch (kind) {
      case MappingKind::static_map: return std::string(to_string(scheme));
      case MappingKind::rubix_s: return "rubix-s:gs" + std::to_string(gang_size);
      case MappingKind::rubix_d: return "rubix-d:gs" + std::to_string(rubix_d.gang_size);
    }
    return "?";
  }
};

struct SimConfig {
  Geometry geometry = Geometry::baseline();
  TimingParams timing;
  PagePolicy policy = PagePolicy::open_adaptive;
  MappingConfig mapping;
  MitigationConfig mitigation;
  std::uint64_t seed = 1;
  std::size_t queue_depth = 1;            // 1: closed loop
  std::optional<std::uint64_t> max_epochs;
  std::vector<std::uint64_t> hot_row_thresholds = {64, 512};
  bool line_attribution = true;
};

// Seed tags for the independent random streams of one run.
inline constexpr std::uint64_t kSeedTagCipher = 1;
inline constexpr std::uint64_t kSeedTagRubixD = 2;
inline constexpr std::uint64_t kSeedTagMitigation = 3;

class Simulator {
 public:
  explicit Simulator(SimConfig cfg)
      : cfg_(std::move(cfg)),
        map_(make_map(cfg_)),
        remap_rng_(derive_seed(cfg_.seed, kSeedTagRubixD)),
        mitig_rng_(derive_seed(cfg_.seed, kSeedTagMitigation)),
        mitigation_(cfg_.mitigation, cfg_.geometry, cfg_.timing),
        dram_(cfg_.geometry, cfg_.timing, cfg_.policy, mitigation_.physical_rows_per_bank()),
        oracle_(mitigation_.physical_rows_per_bank(), cfg_.geometry.total_banks(), cfg_.mitigation.t_rh),
        run_counts_(dram_.window().size()),
        next_boundary_(cfg_.timing.refresh_interval) {
    if (cfg_.queue_depth == 0) throw ConfigError("queue depth must be positive");
    if (cfg_.mapping.kind == MappingKind::rubix_d)
      rubix_d_.emplace(cfg_.mapping.rubix_d, cfg_.geometry, remap_rng_);
    report_.mapping = cfg_.mapping.name();
    report_.mitigation = std::string(to_string(cfg_.mitigation.scheme));
    report_.t_rh = cfg_.mitigation.t_rh;
    report_.seed = cfg_.seed;
    report_.hot_row_thresholds = cfg_.hot_row_thresholds;
    report_.hot_rows.assign(cfg_.hot_row_thresholds.size(), 0);
    if (cfg_.line_attribution) report_.lines_per_hot_row.emplace();
  }

  const SimConfig& config() const { return cfg_; }
  const AddressMap& address_map() const { return map_; }
  const Dram& dram() const { return dram_; }
  const Mitigation& mitigation() const { return mitigation_; }
  const BitFlipOracle& oracle() const { return oracle_; }
  const std::optional<RubixD>& rubix_d() const { return rubix_d_; }
  const SimReport& report() const { return report_; }
  Tick next_boundary() const { return next_boundary_; }

  /// Where a logical line currently lives: (channel, flat bank, physical row, column).
  struct Placement {
    PhysicalLocation loc;
    std::uint64_t flat_bank = 0;
    std::uint64_t row = 0;  // physical row after mitigation indirection
  };

  Placement place(LineAddress line) const {
    const LineAddress routed = rubix_d_ ? rubix_d_->translate(line) : line;
    Placement p;
    p.loc = map_.map(routed);
    const auto phys = mitigation_.locate(cfg_.geometry.flat_bank(p.loc), p.loc.row);
    p.flat_bank = phys.flat_bank;
    p.row = phys.row;
    p.loc.channel = phys.flat_bank / cfg_.geometry.banks_per_channel;
    p.loc.bank = phys.flat_bank % cfg_.geometry.banks_per_channel;
    p.loc.row = phys.row;
    return p;
  }

  /// Serve one request issued at time t; returns its result.
  AccessResult access(LineAddress line, Tick t) {
    check_range(line, cfg_.geometry);
    for (;;) {
      advance_to(t);
      const Placement p = place(line);
      const Tick start = std::max(t, dram_.channel_free(p.loc.channel));
      if (start >= next_boundary_) {
        t = start;
        continue;  // channel block spans a boundary; re-map in the new window
      }
      if (!dram_.would_hit(p.flat_bank, p.row)) {
        if (auto until = mitigation_.gate(p.flat_bank, p.row, next_boundary_)) {
          ++report_.mitigation_events[cfg_.mitigation.scheme == MitigationScheme::blockhammer ? "blockhammer_delay"
                                                                                            : "quarantine_stall"];
          ++epoch_.mitigation_events;
          t = *until;
          continue;
        }
      }
      const AccessResult r = dram_.access(p.loc.channel, p.flat_bank, p.row, start);
      ++report_.total_accesses;
      ++epoch_.accesses;
      epoch_active_ = true;
      if (r.hit) {
        ++report_.row_buffer_hits;
        ++epoch_.row_buffer_hits;
      } else {
        on_activation(line, p, r.completion_time);
      }
      report_.completion_time = std::max(report_.completion_time, r.completion_time);
      return r;
    }
  }

  /// Close every refresh window that ends at or before t.
  void advance_to(Tick t) {
    while (t >= next_boundary_) {
      close_epoch(next_boundary_, false);
      next_boundary_ += cfg_.timing.refresh_interval;
    }
  }

  /// Drive the whole stream through the controller and finalize the report.
  SimReport run(AccessSource& src, std::string workload) {
    report_.workload = std::move(workload);
    const Tick stop = cfg_.max_epochs ? static_cast<Tick>(*cfg_.max_epochs) * cfg_.timing.refresh_interval : 0;
    std::vector<Pending> queue;
    std::optional<TraceRecord> ahead = src.next();
    Tick now = 0;
    std::uint64_t next_id = 0;
    for (;;) {
      if (stop && now >= stop) break;
      while (ahead && queue.size() < cfg_.queue_depth) {
        const Tick arrival = static_cast<Tick>(ahead->arrival_ns) * kTicksPerNs;
        if (!queue.empty() && arrival > now) break;
        queue.push_back({next_id++, arrival, LineAddress{ahead->line}});
        ahead = src.next();
      }
      if (queue.empty()) break;
      std::size_t pick = 0;
      if (queue.size() > 1) {
        std::vector<Request> reqs;
        reqs.reserve(queue.size());
        for (const auto& q : queue) {
          const auto p = place(q.line);
          reqs.push_back({q.id, q.arrival, p.loc.channel, p.flat_bank, p.row});
        }
        pick = schedule(reqs, now, dram_);
      }
      const Pending job = queue[pick];
      queue.erase(queue.begin() + static_cast<std::ptrdiff_t>(pick));
      now = std::max(now, job.arrival);
      if (stop && now >= stop) break;
      now = access(job.line, now).completion_time;
    }
    return finish(now);
  }

  /// Close the open window (if it saw any activity) and return the report.
  SimReport finish(Tick end) {
    advance_to(end);
    if (epoch_active_) close_epoch(end, true);
    report_.activations_per_row = row_activation_stats(run_counts_.counts(), run_counts_.touched());
    report_.unique_rows_touched = report_.activations_per_row.rows;
    report_.flips = oracle_.flips();
    if (rubix_d_) report_.key_rotations = rubix_d_->rotations();
    return report_;
  }

 private:
  struct Pending {
    std::uint64_t id;
    Tick arrival;
    LineAddress line;
  };

  static AddressMap make_map(const SimConfig& cfg) {
    cfg.geometry.validate();
    cfg.timing.validate();
    if (cfg.mapping.kind == MappingKind::rubix_s)
      return AddressMap(cfg.geometry, make_rubix_s(cfg.geometry, cfg.mapping.gang_size,
                                                   derive_seed(cfg.seed, kSeedTagCipher), cfg.mapping.scheme));
    return AddressMap(cfg.geometry, cfg.mapping.scheme);
  }

  void on_activation(LineAddress line, const Placement& p, Tick done) {
    ++report_.total_activations;
    ++epoch_.activations;
    const std::uint64_t idx = dram_.row_index(p.flat_bank, p.row);
    run_counts_.increment(idx);
    if (cfg_.line_attribution) {
      auto& cols = attribution_[idx];
      if (cols.empty()) cols.assign(cfg_.geometry.row_size_lines, 0);
      ++cols[p.loc.column];
    }
    oracle_.add(p.flat_bank, p.row);
    if (auto action = mitigation_.on_activation(p.flat_bank, p.row, mitig_rng_)) apply(*action, p.loc.channel, done);
    if (rubix_d_) {
      if (auto ev = rubix_d_->on_activation(line, remap_rng_)) apply(*ev, done);
    }
  }

  void apply(const MitigationAction& a, std::uint64_t channel, Tick now) {
    ++report_.mitigation_events[std::string(to_string(a.kind))];
    ++epoch_.mitigation_events;
    if (a.neutralize_aggressor) oracle_.neutralize(a.flat_bank, a.aggressor);
    for (const auto& ind : a.induced) {
      oracle_.add(ind.flat_bank, ind.row, ind.count);
      report_.mitigation_activations += ind.count;
    }
    if (a.channel_block > 0) {
      const std::uint64_t partner_channel = a.partner_bank / cfg_.geometry.banks_per_channel;
      dram_.block_channel(channel, a.channel_block, now);
      if (partner_channel != channel) dram_.block_channel(partner_channel, a.channel_block, now);
      report_.channel_blocked += a.channel_block;
      dram_.close_bank(a.flat_bank);
      dram_.close_bank(a.partner_bank);
    }
    if (a.bank_block > 0) dram_.occupy_bank(a.flat_bank, now + a.bank_block);
  }

  void apply(const RemapEvent& ev, Tick now) {
    if (ev.skipped) {
      ++report_.remap_skips;
      return;
    }
    ++report_.remap_swaps;
    report_.remap_activations += ev.cost.activations;
    report_.remap_cas_ops += ev.cost.cas_reads + ev.cost.cas_writes;
    const auto src = map_.map(rubix_d_->gang_line(ev.vgroup, ev.src_row));
    const auto dst = map_.map(rubix_d_->gang_line(ev.vgroup, ev.dst_row));
    const auto sb = cfg_.geometry.flat_bank(src), db = cfg_.geometry.flat_bank(dst);
    // Source row is opened twice (read out, write back), destination once.
    const auto src_acts = static_cast<std::uint32_t>(ev.cost.activations - ev.cost.activations / 3);
    const auto ps = mitigation_.locate(sb, src.row), pd = mitigation_.locate(db, dst.row);
    oracle_.add(ps.flat_bank, ps.row, src_acts);
    oracle_.add(pd.flat_bank, pd.row, static_cast<std::uint32_t>(ev.cost.activations) - src_acts);
    const Tick dur = static_cast<Tick>(ev.cost.activations) * cfg_.timing.t_rc +
                     static_cast<Tick>(ev.cost.cas_reads + ev.cost.cas_writes) * cfg_.timing.t_cas_op;
    const std::uint64_t cs = ps.flat_bank / cfg_.geometry.banks_per_channel;
    const std::uint64_t cd = pd.flat_bank / cfg_.geometry.banks_per_channel;
    dram_.block_channel(cs, dur, now);
    if (cd != cs) dram_.block_channel(cd, dur, now);
    report_.channel_blocked += dur;
    dram_.close_bank(ps.flat_bank);
    dram_.close_bank(pd.flat_bank);
  }

  void close_epoch(Tick end, bool partial) {
    auto& win = dram_.window();
    epoch_.index = epoch_index_;
    epoch_.start = win.window_start();
    epoch_.end = end;
    epoch_.partial = partial;
    epoch_.hot_rows = hot_row_census(win.counts(), win.touched(), cfg_.hot_row_thresholds);
    for (std::size_t i = 0; i < epoch_.hot_rows.size(); ++i) {
      report_.hot_rows[i] += epoch_.hot_rows[i];
      if (cfg_.hot_row_thresholds[i] == 64) report_.hot_rows_64 += epoch_.hot_rows[i];
      if (cfg_.hot_row_thresholds[i] == 512) report_.hot_rows_512 += epoch_.hot_rows[i];
    }
    if (cfg_.line_attribution) {
      report_.lines_per_hot_row->merge(lines_per_hot_row(attribution_, kHotRowThreshold));
      attribution_.clear();
    }
    const auto flips_before = flips_seen_;
    flips_seen_ = oracle_.flips().size();
    epoch_.flips = flips_seen_ - flips_before;
    report_.epochs.push_back(epoch_);
    epoch_ = {};
    epoch_active_ = false;
    ++epoch_index_;
    win.reset(end);
    oracle_.end_epoch();
    mitigation_.end_epoch();
  }

  SimConfig cfg_;
  AddressMap map_;
  Rng remap_rng_;
  Rng mitig_rng_;
  std::optional<RubixD> rubix_d_;
  Mitigation mitigation_;
  Dram dram_;
  BitFlipOracle oracle_;
  ActivationWindow run_counts_;
  LineAttribution attribution_;
  SimReport report_;
  EpochSnapshot epoch_;
  bool epoch_active_ = false;
  std::uint64_t epoch_index_ = 0;
  std::size_t flips_seen_ = 0;
  Tick next_boundary_;
};

}  // namespace rubix
