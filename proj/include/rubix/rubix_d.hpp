#pragma once

// Dynamic xor-based remapping.
//
// The line address splits into [row | gang-in-row (p bits) | line-in-gang (k bits)].
// Each v-group (one gang position across all rows), optionally split into N
// v-segments (every Nth row), owns a RemapState that gradually moves its rows
// from the mapping `row ^ curr_key` to `row ^ curr_key ^ next_key`, one
// pointer position per remap episode.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rubix/common.hpp"
#include "rubix/geometry.hpp"

namespace rubix {

struct RemapState {
  std::uint64_t curr_key = 0;
  std::uint64_t next_key = 0;
  std::uint64_t ptr = 0;
  unsigned bits = 0;  // m: width of the row index this state covers

  std::uint64_t size() const { return std::uint64_t{1} << bits; }
  bool epoch_done() const { return ptr == size(); }

  friend bool operator==(const RemapState&, const RemapState&) = default;
};

/// Two-step translation of a (segment-local) row index.
constexpr std::uint64_t translate_row(const RemapState& s, std::uint64_t row) {
  std::uint64_t r = row ^ s.curr_key;
  if (r < s.ptr || (r ^ s.next_key) < s.ptr) r ^= s.next_key;
  return r;
}

struct RemapCost {
  std::uint64_t activations = 0;
  std::uint64_t cas_reads = 0;
  std::uint64_t cas_writes = 0;

  friend bool operator==(const RemapCost&, const RemapCost&) = default;
};

/// A swap streams one gang out of and into each of two rows.
constexpr RemapCost swap_cost(std::uint64_t gang_size) { return {3, 2 * gang_size, 2 * gang_size}; }

struct RemapEvent {
  std::uint64_t vgroup = 0;
  std::uint64_t segment = 0;
  std::uint64_t src_row = 0;  // row address (segment bits included)
  std::uint64_t dst_row = 0;
  bool skipped = false;
  RemapCost cost;

  friend bool operator==(const RemapEvent&, const RemapEvent&) = default;
};

/// One remap episode at the current pointer. The pair (ptr, ptr ^ next_key) is
/// swapped unless the partner precedes ptr, in which case it was already moved.
inline RemapEvent remap_step(RemapState& s, std::uint64_t gang_size) {
  if (s.epoch_done()) throw StateError("remap episode past the end of the epoch; rotate first");
  RemapEvent ev;
  ev.src_row = s.ptr;
  ev.dst_row = s.ptr ^ s.next_key;
  ev.skipped = ev.dst_row < s.ptr;
  if (!ev.skipped) ev.cost = swap_cost(gang_size);
  ++s.ptr;
  return ev;
}

inline std::optional<RemapEvent> maybe_remap(RemapState& s, double probability, Rng& rng, std::uint64_t gang_size) {
  if (!bernoulli(rng, probability)) return std::nullopt;
  return remap_step(s, gang_size);
}

inline std::uint64_t draw_nonzero_key(Rng& rng, unsigned bits) {
  if (bits == 0) throw ConfigError("remap state needs at least one row bit");
  std::uint64_t k;
  do {
    k = rng() & low_mask(bits);
  } while (k == 0);
  return k;
}

/// Close an epoch: every row now uses curr ^ next; start moving toward a fresh key.
inline void rotate_epoch(RemapState& s, Rng& rng) {
  if (!s.epoch_done())
    throw StateError("epoch rotation with ptr " + std::to_string(s.ptr) + " before " + std::to_string(s.size()));
  s.curr_key ^= s.next_key;
  s.next_key = draw_nonzero_key(rng, s.bits);
  s.ptr = 0;
}

struct RubixDConfig {
  std::uint64_t gang_size = 4;
  std::uint64_t gangs_per_row = 0;  // 0: row_size_lines / gang_size
  std::uint64_t segments = 1;
  double remap_probability = 0.01;
  // Non-zero: remap deterministically every `remap_interval` activations of a
  // v-segment instead of by coin flip.
  std::uint64_t remap_interval = 0;
};

struct RubixDLayout {
  unsigned gang_bits = 0;     // k
  unsigned vgroup_bits = 0;   // p
  unsigned row_bits = 0;      // m = n - p - k
  unsigned segment_bits = 0;  // log2(N)

  std::uint64_t vgroups() const { return std::uint64_t{1} << vgroup_bits; }
  std::uint64_t segments() const { return std::uint64_t{1} << segment_bits; }
  unsigned state_bits() const { return row_bits - segment_bits; }
};

inline RubixDLayout rubix_d_layout(const RubixDConfig& cfg, const Geometry& geom) {
  if (cfg.gang_size != 1 && cfg.gang_size != 2 && cfg.gang_size != 4)
    throw ConfigError("gang size must be 1, 2 or 4 (got " + std::to_string(cfg.gang_size) + ")");
  const std::uint64_t gpr = cfg.gangs_per_row ? cfg.gangs_per_row : geom.row_size_lines / cfg.gang_size;
  if (!is_pow2(gpr)) throw ConfigError("gangs per row must be a power of two");
  if (!is_pow2(cfg.segments)) throw ConfigError("segments per v-group must be a power of two");
  if (cfg.remap_probability < 0.0 || cfg.remap_probability > 1.0)
    throw ConfigError("remap probability must lie in [0, 1]");
  RubixDLayout l;
  l.gang_bits = log2_exact(cfg.gang_size);
  l.vgroup_bits = log2_exact(gpr);
  l.segment_bits = log2_exact(cfg.segments);
  const unsigned n = geom.line_addr_bits();
  if (l.gang_bits + l.vgroup_bits + l.segment_bits >= n)
    throw ConfigError("gang, v-group and segment bits leave no row bits to randomize");
  l.row_bits = n - l.gang_bits - l.vgroup_bits;
  return l;
}

inline constexpr std::uint64_t kKeyPairBytes = 8;
inline constexpr std::uint64_t kPointerBytes = 8;

/// One key pair word plus one pointer word per v-segment.
inline std::uint64_t storage_bytes(const RubixDLayout& l) {
  return (kKeyPairBytes + kPointerBytes) * l.vgroups() * l.segments();
}
inline std::uint64_t storage_bytes(const RubixDConfig& cfg, const Geometry& geom) {
  return storage_bytes(rubix_d_layout(cfg, geom));
}

/// Demand activations to one v-segment needed to walk its pointer across
/// every row once: (rows per segment) / remap probability.
inline std::uint64_t remap_period(std::uint64_t rows_per_vgroup, std::uint64_t segments, double remap_probability) {
  if (segments == 0 || remap_probability <= 0.0) throw ConfigError("remap period needs segments > 0 and RR > 0");
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(rows_per_vgroup) /
                                                 static_cast<double>(segments) / remap_probability));
}
inline std::uint64_t remap_period(const RubixDConfig& cfg, const Geometry& geom) {
  const auto l = rubix_d_layout(cfg, geom);
  return remap_period(std::uint64_t{1} << l.row_bits, l.segments(), cfg.remap_probability);
}

class RubixD {
 public:
  RubixD(RubixDConfig cfg, const Geometry& geom, Rng& rng) : cfg_(cfg), layout_(rubix_d_layout(cfg, geom)), geom_(geom) {
    const unsigned m = layout_.state_bits();
    states_.resize(layout_.vgroups() * layout_.segments());
    for (auto& s : states_) {
      s.bits = m;
      s.curr_key = rng() & low_mask(m);
      s.next_key = draw_nonzero_key(rng, m);
    }
    activations_.assign(states_.size(), 0);
  }

  const RubixDConfig& config() const { return cfg_; }
  const RubixDLayout& layout() const { return layout_; }
  std::uint64_t storage_bytes() const { return rubix::storage_bytes(layout_); }

  std::uint64_t vgroup_of(LineAddress line) const { return (line.value >> layout_.gang_bits) & low_mask(layout_.vgroup_bits); }
  std::uint64_t row_of(LineAddress line) const { return line.value >> (layout_.gang_bits + layout_.vgroup_bits); }
  std::uint64_t segment_of_row(std::uint64_t row) const { return row & low_mask(layout_.segment_bits); }

  RemapState& state(std::uint64_t vgroup, std::uint64_t segment) { return states_[vgroup * layout_.segments() + segment]; }
  const RemapState& state(std::uint64_t vgroup, std::uint64_t segment) const {
    return states_[vgroup * layout_.segments() + segment];
  }

  /// Full row address translation inside one v-group.
  std::uint64_t translate_row(std::uint64_t vgroup, std::uint64_t row) const {
    const unsigned sb = layout_.segment_bits;
    const std::uint64_t seg = row & low_mask(sb);
    return (rubix::translate_row(state(vgroup, seg), row >> sb) << sb) | seg;
  }

  LineAddress translate(LineAddress line) const {
    check_range(line, geom_);
    const unsigned low = layout_.gang_bits + layout_.vgroup_bits;
    const std::uint64_t vg = vgroup_of(line);
    return {(translate_row(vg, row_of(line)) << low) | (line.value & low_mask(low))};
  }

  /// Line address of the gang slot `vgroup` in row address `row` (before any
  /// further static mapping).
  LineAddress gang_line(std::uint64_t vgroup, std::uint64_t row) const {
    return {(row << (layout_.gang_bits + layout_.vgroup_bits)) | (vgroup << layout_.gang_bits)};
  }

  /// Called once per demand activation of `line`. May run one remap episode in
  /// the line's v-segment, rotating its keys when the pointer wraps.
  std::optional<RemapEvent> on_activation(LineAddress line, Rng& rng) {
    const std::uint64_t vg = vgroup_of(line);
    const std::uint64_t seg = segment_of_row(row_of(line));
    const std::size_t idx = vg * layout_.segments() + seg;
    RemapState& s = states_[idx];
    bool fire;
    if (cfg_.remap_interval)
      fire = ++activations_[idx] % cfg_.remap_interval == 0;
    else
      fire = bernoulli(rng, cfg_.remap_probability);
    if (!fire) return std::nullopt;
    RemapEvent ev = remap_step(s, cfg_.gang_size);
    const unsigned sb = layout_.segment_bits;
    ev.vgroup = vg;
    ev.segment = seg;
    ev.src_row = (ev.src_row << sb) | seg;
    ev.dst_row = (ev.dst_row << sb) | seg;
    if (s.epoch_done()) {
      rotate_epoch(s, rng);
      ++rotations_;
    }
    return ev;
  }

  std::uint64_t rotations() const { return rotations_; }

 private:
  RubixDConfig cfg_;
  RubixDLayout layout_;
  Geometry geom_;
  std::vector<RemapState> states_;
  std::vector<std::uint64_t> activations_;
  std::uint64_t rotations_ = 0;
};

}  // namespace rubix
