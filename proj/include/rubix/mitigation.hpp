#pragma once

// Rowhammer mitigations driven by tracker signals, and the bit-flip oracle
// that encodes the threat model: a run is insecure if any row collects more
// than T_RH unmitigated activations within one refresh window.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "rubix/common.hpp"
#include "rubix/dram.hpp"
#include "rubix/geometry.hpp"
#include "rubix/tracking.hpp"

namespace rubix {

enum class MitigationScheme { none, victim_refresh, aqua, srs, blockhammer };

inline std::string_view to_string(MitigationScheme s) {
  switch (s) {
    case MitigationScheme::none: return "none";
    case MitigationScheme::victim_refresh: return "victim_refresh";
    case MitigationScheme::aqua: return "aqua";
    case MitigationScheme::srs: return "srs";
    case MitigationScheme::blockhammer: return "blockhammer";
  }
  return "?";
}

inline MitigationScheme parse_mitigation_scheme(std::string_view s) {
  if (s == "none") return MitigationScheme::none;
  if (s == "victim_refresh" || s == "victim-refresh" || s == "vr") return MitigationScheme::victim_refresh;
  if (s == "aqua") return MitigationScheme::aqua;
  if (s == "srs") return MitigationScheme::srs;
  if (s == "blockhammer") return MitigationScheme::blockhammer;
  throw ConfigError("unknown mitigation scheme '" + std::string(s) + "'");
}

enum class TrackerKind { misra_gries, per_row };

inline std::string_view to_string(TrackerKind k) { return k == TrackerKind::misra_gries ? "misra-gries" : "per-row"; }

inline TrackerKind parse_tracker_kind(std::string_view s) {
  if (s == "misra-gries" || s == "misra_gries" || s == "mg") return TrackerKind::misra_gries;
  if (s == "per-row" || s == "per_row") return TrackerKind::per_row;
  throw ConfigError("unknown tracker '" + std::string(s) + "'");
}

/// Bulk row copy: activations plus column reads and writes, per direction.
struct RowTransferCost {
  std::uint64_t activations = 2;
  std::uint64_t cas_reads = 128;
  std::uint64_t cas_writes = 128;

  Tick duration(const TimingParams& t) const {
    return static_cast<Tick>(activations) * t.t_rc + static_cast<Tick>(cas_reads + cas_writes) * t.t_cas_op;
  }
};

struct MitigationConfig {
  MitigationScheme scheme = MitigationScheme::none;
  std::uint64_t t_rh = 128;
  std::optional<TrackerKind> tracker;  // default: per-row for blockhammer, Misra-Gries otherwise
  std::size_t tracker_capacity = 0;    // Misra-Gries entries per bank; 0 = sized from timing
  double quarantine_fraction = 0.01;
  std::optional<RowTransferCost> transfer;  // default: 2 ACT + one row of reads and writes

  TrackerKind tracker_kind() const {
    return tracker ? *tracker : (scheme == MitigationScheme::blockhammer ? TrackerKind::per_row : TrackerKind::misra_gries);
  }

  /// AQUA, Blockhammer and victim refresh act at T_RH/2; SRS at T_RH/3.
  std::uint64_t tracker_threshold() const {
    return scheme == MitigationScheme::srs ? TrackerThreshold::third(t_rh).tracker_threshold
                                           : TrackerThreshold::half(t_rh).tracker_threshold;
  }

  void validate() const {
    if (t_rh < 3) throw ConfigError("t_rh must be at least 3");
    if (quarantine_fraction <= 0.0 || quarantine_fraction > 0.5)
      throw ConfigError("quarantine fraction must lie in (0, 0.5]");
    if (scheme == MitigationScheme::blockhammer && tracker_kind() != TrackerKind::per_row)
      throw ConfigError("blockhammer needs the exact per-row tracker");
  }
};

struct Flip {
  std::uint64_t epoch = 0;
  std::uint64_t flat_bank = 0;
  std::uint64_t row = 0;
  std::uint64_t count = 0;

  friend bool operator==(const Flip&, const Flip&) = default;
};

/// Rows with more than `t_rh` activations.
inline std::vector<std::uint64_t> flip_oracle_check(std::span<const std::uint32_t> counts, std::uint64_t t_rh) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > t_rh) out.push_back(i);
  return out;
}

/// Tracks, per physical row, activations since the row's neighbours were last
/// refreshed by a mitigation. Demand, refresh-induced and migration
/// activations all count. Records the first crossing of T_RH per row per epoch.
class BitFlipOracle {
 public:
  BitFlipOracle(std::uint64_t rows_per_bank, std::uint64_t banks, std::uint64_t t_rh)
      : rows_per_bank_(rows_per_bank), t_rh_(t_rh), counts_(rows_per_bank * banks) {}

  void add(std::uint64_t flat_bank, std::uint64_t row, std::uint32_t n = 1) {
    const auto idx = flat_bank * rows_per_bank_ + row;
    const auto c = counts_.increment(idx, n);
    if (c > t_rh_ && c - n <= t_rh_) flips_.push_back({epoch_, flat_bank, row, c});
  }

  /// The row's victims were refreshed: its disturbance starts over.
  void neutralize(std::uint64_t flat_bank, std::uint64_t row) { counts_.set(flat_bank * rows_per_bank_ + row, 0); }

  std::uint32_t count(std::uint64_t flat_bank, std::uint64_t row) const {
    return counts_.count(flat_bank * rows_per_bank_ + row);
  }

  void end_epoch() {
    counts_.reset(0);
    ++epoch_;
  }

  std::uint64_t t_rh() const { return t_rh_; }
  const std::vector<Flip>& flips() const { return flips_; }
  bool secure() const { return flips_.empty(); }

 private:
  std::uint64_t rows_per_bank_;
  std::uint64_t t_rh_;
  ActivationWindow counts_;
  std::vector<Flip> flips_;
  std::uint64_t epoch_ = 0;
};

/// Logical-row to physical-row indirection, one table per domain (identity unless moved).
class RowIndirection {
 public:
  explicit RowIndirection(std::uint64_t banks = 0) : fwd_(banks), inv_(banks) {}

  std::uint64_t physical(std::uint64_t bank, std::uint64_t logical) const {
    auto it = fwd_[bank].find(logical);
    return it == fwd_[bank].end() ? logical : it->second;
  }

  /// Logical row stored at `physical`, or nullopt if the slot is vacant.
  std::optional<std::uint64_t> logical(std::uint64_t bank, std::uint64_t physical) const {
    if (auto it = inv_[bank].find(physical); it != inv_[bank].end()) return it->second;
    if (vacant_[bank].contains(physical)) return std::nullopt;
    if (fwd_[bank].contains(physical)) return std::nullopt;  // its home content moved away
    return physical;
  }

  /// Exchange the contents of two physical rows.
  void swap(std::uint64_t bank, std::uint64_t pa, std::uint64_t pb) {
    const auto la = logical(bank, pa), lb = logical(bank, pb);
    if (la) assign(bank, *la, pb);
    else vacate(bank, pb);
    if (lb) assign(bank, *lb, pa);
    else vacate(bank, pa);
  }

  /// Move the content of physical row `from` into vacant row `to`.
  void move(std::uint64_t bank, std::uint64_t from, std::uint64_t to) {
    const auto l = logical(bank, from);
    if (!l) throw StateError("moving a vacant row");
    assign(bank, *l, to);
    vacate(bank, from);
  }

  void reset() {
    for (auto& m : fwd_) m.clear();
    for (auto& m : inv_) m.clear();
    for (auto& s : vacant_) s.clear();
  }

  std::uint64_t moved_rows() const {
    std::uint64_t n = 0;
    for (const auto& m : fwd_) n += m.size();
    return n;
  }

  /// Every moved logical row maps to a distinct physical row that maps back.
  bool consistent() const {
    for (std::size_t b = 0; b < fwd_.size(); ++b) {
      std::unordered_set<std::uint64_t> seen;
      for (const auto& [l, p] : fwd_[b]) {
        if (!seen.insert(p).second) return false;
        if (logical(b, p) != l) return false;
      }
      for (const auto& [p, l] : inv_[b])
        if (physical(b, l) != p) return false;
    }
    return true;
  }

 private:
  void assign(std::uint64_t bank, std::uint64_t logical_row, std::uint64_t physical_row) {
    vacant_[bank].erase(physical_row);
    if (logical_row == physical_row) {
      fwd_[bank].erase(logical_row);
      inv_[bank].erase(physical_row);
    } else {
      fwd_[bank][logical_row] = physical_row;
      inv_[bank][physical_row] = logical_row;
    }
  }

  void vacate(std::uint64_t bank, std::uint64_t physical_row) {
    inv_[bank].erase(physical_row);
    vacant_[bank].insert(physical_row);
  }

  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> fwd_;
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> inv_;
  std::vector<std::unordered_set<std::uint64_t>> vacant_ = std::vector<std::unordered_set<std::uint64_t>>(fwd_.size());
};

enum class ActionKind { victim_refresh, aqua_migration, srs_swap, quarantine_full };

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::victim_refresh: return "victim_refresh";
    case ActionKind::aqua_migration: return "aqua_migration";
    case ActionKind::srs_swap: return "srs_swap";
    case ActionKind::quarantine_full: return "quarantine_full";
  }
  return "?";
}

struct InducedActivation {
  std::uint64_t flat_bank = 0;
  std::uint64_t row = 0;
  std::uint32_t count = 0;
};

/// Side effects of one mitigation decision, to be charged by the caller.
struct MitigationAction {
  ActionKind kind = ActionKind::victim_refresh;
  std::uint64_t flat_bank = 0;
  std::uint64_t aggressor = 0;               // physical row that tripped the tracker
  std::optional<std::uint64_t> partner;      // quarantine row or swap partner
  std::uint64_t partner_bank = 0;
  std::vector<InducedActivation> induced;    // extra activations of physical rows
  bool neutralize_aggressor = false;         // victim refresh restored its neighbours
  Tick channel_block = 0;
  Tick bank_block = 0;
};

/// Trackers, indirection and policy for one simulation run.
class Mitigation {
 public:
  Mitigation(MitigationConfig cfg, const Geometry& geom, const TimingParams& timing)
      : cfg_(cfg),
        timing_(timing),
        banks_(geom.total_banks()),
        rows_(geom.rows_per_bank),
        row_columns_(geom.row_size_lines),
        indirection_(1) {
    cfg_.validate();
    if (cfg_.scheme == MitigationScheme::aqua) {
      quarantine_rows_ = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(static_cast<double>(rows_) * cfg_.quarantine_fraction + 0.999999));
      quarantine_next_.assign(banks_, 0);
    }
    const auto threshold = cfg_.tracker_threshold();
    if (cfg_.scheme == MitigationScheme::none) return;
    if (cfg_.tracker_kind() == TrackerKind::per_row) {
      for (std::uint64_t b = 0; b < banks_; ++b) per_row_.emplace_back(physical_rows_per_bank(), threshold);
    } else {
      capacity_ = cfg_.tracker_capacity ? cfg_.tracker_capacity
                                        : default_mg_capacity(timing_.max_activations_per_window(), threshold);
      for (std::uint64_t b = 0; b < banks_; ++b) mg_.emplace_back(capacity_, threshold);
    }
  }

  const MitigationConfig& config() const { return cfg_; }
  std::uint64_t physical_rows_per_bank() const { return rows_ + quarantine_rows_; }
  std::uint64_t quarantine_rows() const { return quarantine_rows_; }
  std::size_t tracker_capacity() const { return capacity_; }
  const RowIndirection& indirection() const { return indirection_; }
  RowIndirection& indirection() { return indirection_; }

  struct RowRef {
    std::uint64_t flat_bank = 0;
    std::uint64_t row = 0;
    friend bool operator==(const RowRef&, const RowRef&) = default;
  };

  /// Physical home of a logical row. AQUA moves rows inside their bank; SRS
  /// may move them anywhere in memory.
  RowRef locate(std::uint64_t flat_bank, std::uint64_t logical_row) const {
    if (cfg_.scheme != MitigationScheme::aqua && cfg_.scheme != MitigationScheme::srs) return {flat_bank, logical_row};
    return split(indirection_.physical(0, key(flat_bank, logical_row)));
  }

  /// Logical row stored in a physical slot; nullopt if vacant.
  std::optional<RowRef> resident(std::uint64_t flat_bank, std::uint64_t physical_row) const {
    auto l = indirection_.logical(0, key(flat_bank, physical_row));
    if (!l) return std::nullopt;
    return split(*l);
  }

  /// Blockhammer quota and AQUA overflow stalls: if set, the activation must
  /// wait for the returned time (the end of the current window).
  std::optional<Tick> gate(std::uint64_t flat_bank, std::uint64_t row, Tick window_end) const {
    if (cfg_.scheme == MitigationScheme::blockhammer) {
      if (per_row_[flat_bank].count(row) >= per_row_[flat_bank].threshold()) return window_end;
    } else if (cfg_.scheme == MitigationScheme::aqua) {
      if (stalled_.contains(flat_bank * physical_rows_per_bank() + row)) return window_end;
    }
    return std::nullopt;
  }

  /// Feed one demand activation of a physical row to the tracker.
  std::optional<MitigationAction> on_activation(std::uint64_t flat_bank, std::uint64_t row, Rng& rng) {
    if (cfg_.scheme == MitigationScheme::none) return std::nullopt;
    const bool signal =
        per_row_.empty() ? mg_[flat_bank].insert(row) : per_row_[flat_bank].insert(row);
    if (!signal) return std::nullopt;
    switch (cfg_.scheme) {
      case MitigationScheme::victim_refresh: return victim_refresh(flat_bank, row);
      case MitigationScheme::aqua: return aqua_migrate(flat_bank, row);
      case MitigationScheme::srs: return srs_swap(flat_bank, row, rng);
      default: return std::nullopt;  // blockhammer acts in gate()
    }
  }

  /// Refresh the aggressor's existing neighbours; each refresh is an activation.
  MitigationAction victim_refresh(std::uint64_t flat_bank, std::uint64_t row) const {
    MitigationAction a;
    a.kind = ActionKind::victim_refresh;
    a.flat_bank = flat_bank;
    a.aggressor = row;
    a.neutralize_aggressor = true;
    const std::uint64_t limit = physical_rows_per_bank();
    if (row > 0) a.induced.push_back({flat_bank, row - 1, 1});
    if (row + 1 < limit) a.induced.push_back({flat_bank, row + 1, 1});
    a.bank_block = static_cast<Tick>(a.induced.size()) * timing_.t_rc;
    return a;
  }

  /// Move the aggressor's content to the next free quarantine row. When the
  /// quarantine is exhausted the row is stalled until the window ends.
  MitigationAction aqua_migrate(std::uint64_t flat_bank, std::uint64_t row) {
    MitigationAction a;
    a.flat_bank = flat_bank;
    a.aggressor = row;
    if (quarantine_next_[flat_bank] >= quarantine_rows_ || !indirection_.logical(0, key(flat_bank, row))) {
      a.kind = ActionKind::quarantine_full;
      stalled_.insert(flat_bank * physical_rows_per_bank() + row);
      return a;
    }
    const std::uint64_t dest = rows_ + quarantine_next_[flat_bank]++;
    indirection_.move(0, key(flat_bank, row), key(flat_bank, dest));
    a.kind = ActionKind::aqua_migration;
    a.partner = dest;
    a.partner_bank = flat_bank;
    const auto cost = transfer();
    a.induced = {{flat_bank, row, static_cast<std::uint32_t>(cost.activations / 2)},
                 {flat_bank, dest, static_cast<std::uint32_t>(cost.activations - cost.activations / 2)}};
    a.channel_block = cost.duration(timing_);
    return a;
  }

  /// Exchange the aggressor with a uniformly random other row in memory.
  MitigationAction srs_swap(std::uint64_t flat_bank, std::uint64_t row, Rng& rng) {
    const std::uint64_t self = key(flat_bank, row);
    std::uint64_t g;
    do {
      g = uniform_below(rng, banks_ * rows_);
    } while (g == self);
    const RowRef partner = split(g);
    indirection_.swap(0, self, g);
    MitigationAction a;
    a.kind = ActionKind::srs_swap;
    a.flat_bank = flat_bank;
    a.aggressor = row;
    a.partner = partner.row;
    a.partner_bank = partner.flat_bank;
    const auto cost = transfer();
    const auto per_row = static_cast<std::uint32_t>(cost.activations);
    a.induced = {{flat_bank, row, per_row}, {partner.flat_bank, partner.row, per_row}};
    a.channel_block = 2 * cost.duration(timing_);
    return a;
  }

  /// Window boundary: trackers forget, quarantine drains, stalls lift.
  void end_epoch() {
    for (auto& t : mg_) t.reset();
    for (auto& t : per_row_) t.reset();
    if (cfg_.scheme == MitigationScheme::aqua) {
      indirection_.reset();
      std::fill(quarantine_next_.begin(), quarantine_next_.end(), 0);
    }
    stalled_.clear();
  }

  bool trackers_empty() const {
    return std::all_of(mg_.begin(), mg_.end(), [](const auto& t) { return t.empty(); }) &&
           std::all_of(per_row_.begin(), per_row_.end(), [](const auto& t) { return t.empty(); });
  }

  RowTransferCost transfer() const {
    return cfg_.transfer ? *cfg_.transfer : RowTransferCost{2, row_columns_, row_columns_};
  }

 private:
  std::uint64_t key(std::uint64_t flat_bank, std::uint64_t row) const { return flat_bank * physical_rows_per_bank() + row; }
  RowRef split(std::uint64_t k) const { return {k / physical_rows_per_bank(), k % physical_rows_per_bank()}; }

  MitigationConfig cfg_;
  TimingParams timing_;
  std::uint64_t banks_;
  std::uint64_t rows_;
  std::uint64_t row_columns_;
  std::uint64_t quarantine_rows_ = 0;
  std::size_t capacity_ = 0;
  std::vector<std::uint64_t> quarantine_next_;
  std::vector<MisraGries> mg_;
  std::vector<PerRowTracker> per_row_;
  RowIndirection indirection_;
  std::unordered_set<std::uint64_t> stalled_;
};

}  // namespace rubix
