#pragma once

// DRAM geometry, line/location types and the static line-to-row mappings.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rubix/common.hpp"

namespace rubix {

/// Index of a 64-byte line in the physical address space.
struct LineAddress {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(const LineAddress&, const LineAddress&) = default;
};

struct PhysicalLocation {
  std::uint64_t channel = 0;
  std::uint64_t bank = 0;
  std::uint64_t row = 0;
  std::uint64_t column = 0;  // line-in-row

  friend constexpr bool operator==(const PhysicalLocation&, const PhysicalLocation&) = default;
};

struct Geometry {
  std::uint64_t channels = 1;
  std::uint64_t banks_per_channel = 16;
  std::uint64_t rows_per_bank = std::uint64_t{1} << 17;
  std::uint64_t row_size_lines = 128;

  /// 16 GB, 128K rows x 16 banks x 1 rank x 1 channel, 8 KB rows.
  static constexpr Geometry baseline() { return {}; }

  /// Single bank, 4 GB, 1M rows of 4 KB (64 lines).
  static constexpr Geometry illustration() { return {1, 1, std::uint64_t{1} << 20, 64}; }

  /// 2^16 lines: 16 banks x 32 rows x 128 lines. Small enough for exhaustive scans.
  static constexpr Geometry test16() { return {1, 16, 32, 128}; }

  void validate() const {
    if (!is_pow2(channels) || !is_pow2(banks_per_channel) || !is_pow2(rows_per_bank) || !is_pow2(row_size_lines))
      throw ConfigError("geometry counts must be powers of two");
    if (line_addr_bits() > 40) throw ConfigError("geometry too large (more than 2^40 lines)");
  }

  constexpr unsigned channel_bits() const { return log2_exact(channels); }
  constexpr unsigned bank_bits() const { return log2_exact(banks_per_channel); }
  constexpr unsigned row_bits() const { return log2_exact(rows_per_bank); }
  constexpr unsigned column_bits() const { return log2_exact(row_size_lines); }
  constexpr unsigned line_addr_bits() const { return channel_bits() + bank_bits() + row_bits() + column_bits(); }
  constexpr std::uint64_t total_lines() const { return std::uint64_t{1} << line_addr_bits(); }
  constexpr std::uint64_t total_banks() const { return channels * banks_per_channel; }
  constexpr std::uint64_t total_rows() const { return total_banks() * rows_per_bank; }

  constexpr bool contains(const PhysicalLocation& loc) const {
    return loc.channel < channels && loc.bank < banks_per_channel && loc.row < rows_per_bank &&
           loc.column < row_size_lines;
  }

  /// Dense index over (channel, bank).
  constexpr std::uint64_t flat_bank(const PhysicalLocation& loc) const { return loc.channel * banks_per_channel + loc.bank; }
  /// Dense index over (channel, bank, row).
  constexpr std::uint64_t flat_row(const PhysicalLocation& loc) const { return flat_bank(loc) * rows_per_bank + loc.row; }
  /// Dense index over the whole location space.
  constexpr std::uint64_t flat_location(const PhysicalLocation& loc) const {
    return flat_row(loc) * row_size_lines + loc.column;
  }

  friend constexpr bool operator==(const Geometry&, const Geometry&) = default;
};

inline void check_range(LineAddress line, const Geometry& geom) {
  if (line.value >= geom.total_lines())
    throw AddressRangeError("line address " + std::to_string(line.value) + " outside " +
                            std::to_string(geom.line_addr_bits()) + "-bit address space");
}

inline void check_range(const PhysicalLocation& loc, const Geometry& geom) {
  if (!geom.contains(loc)) throw AddressRangeError("physical location outside geometry");
}

enum class StaticScheme { linear, coffee_lake, skylake, mop };

inline std::string_view to_string(StaticScheme s) {
  switch (s) {
    case StaticScheme::linear: return "linear";
    case StaticScheme::coffee_lake: return "coffeelake";
    case StaticScheme::skylake: return "skylake";
    case StaticScheme::mop: return "mop";
  }
  return "?";
}

inline StaticScheme parse_static_scheme(std::string_view name) {
  if (name == "linear") return StaticScheme::linear;
  if (name == "coffeelake" || name == "coffee_lake") return StaticScheme::coffee_lake;
  if (name == "skylake") return StaticScheme::skylake;
  if (name == "mop") return StaticScheme::mop;
  throw ConfigError("unknown mapping scheme '" + std::string(name) + "'");
}

namespace detail {

// Bank hash: the bank index is xor-folded with these bank-width fields of the
// row index. Field i starts at bit kBankHashFieldShift[i] * bank_bits. This is a
// stand-in, not the (undisclosed) Intel hash.
inline constexpr std::array<unsigned, 2> kBankHashFieldShift = {0, 1};

constexpr std::uint64_t bank_hash(std::uint64_t row, unsigned bank_bits) {
  if (bank_bits == 0) return 0;
  std::uint64_t h = 0;
  for (unsigned f : kBankHashFieldShift) h ^= (row >> (f * bank_bits)) & low_mask(bank_bits);
  return h;
}

// Channel striping: gangs of 4 lines round-robin across channels. Returns the
// channel and the line index within that channel.
inline constexpr unsigned kChannelStripeBits = 2;

constexpr std::pair<std::uint64_t, std::uint64_t> split_channel(std::uint64_t line, unsigned ch_bits) {
  if (ch_bits == 0) return {0, line};
  const std::uint64_t ch = (line >> kChannelStripeBits) & low_mask(ch_bits);
  const std::uint64_t rest = ((line >> (kChannelStripeBits + ch_bits)) << kChannelStripeBits) |
                             (line & low_mask(kChannelStripeBits));
  return {ch, rest};
}

constexpr std::uint64_t join_channel(std::uint64_t ch, std::uint64_t rest, unsigned ch_bits) {
  if (ch_bits == 0) return rest;
  return ((rest >> kChannelStripeBits) << (kChannelStripeBits + ch_bits)) | (ch << kChannelStripeBits) |
         (rest & low_mask(kChannelStripeBits));
}

}  // namespace detail

/// Row-major: consecutive lines fill a row, rows fill a bank. No hashing.
inline PhysicalLocation map_linear(LineAddress line, const Geometry& geom) {
  check_range(line, geom);
  auto [ch, l] = detail::split_channel(line.value, geom.channel_bits());
  const unsigned cb = geom.column_bits(), rb = geom.row_bits();
  return {ch, l >> (cb + rb), (l >> cb) & low_mask(rb), l & low_mask(cb)};
}

inline LineAddress unmap_linear(const PhysicalLocation& loc, const Geometry& geom) {
  check_range(loc, geom);
  const unsigned cb = geom.column_bits(), rb = geom.row_bits();
  const std::uint64_t l = (loc.bank << (cb + rb)) | (loc.row << cb) | loc.column;
  return {detail::join_channel(loc.channel, l, geom.channel_bits())};
}

/// Coffee Lake: 128 consecutive lines (two 4 KB pages) share a row; the
/// row-group index supplies the bank bits, xor-hashed with the row.
inline PhysicalLocation map_coffee_lake(LineAddress line, const Geometry& geom) {
  check_range(line, geom);
  auto [ch, l] = detail::split_channel(line.value, geom.channel_bits());
  const unsigned cb = geom.column_bits(), bb = geom.bank_bits();
  const std::uint64_t group = l >> cb;
  const std::uint64_t row = group >> bb;
  const std::uint64_t bank = (group & low_mask(bb)) ^ detail::bank_hash(row, bb);
  return {ch, bank, row, l & low_mask(cb)};
}

inline LineAddress unmap_coffee_lake(const PhysicalLocation& loc, const Geometry& geom) {
  check_range(loc, geom);
  const unsigned cb = geom.column_bits(), bb = geom.bank_bits();
  const std::uint64_t raw_bank = loc.bank ^ detail::bank_hash(loc.row, bb);
  const std::uint64_t group = (loc.row << bb) | raw_bank;
  return {detail::join_channel(loc.channel, (group << cb) | loc.column, geom.channel_bits())};
}

/// Skylake: pairs of lines alternate between two banks, so a 4 KB page puts 32
/// lines in each of two rows and four consecutive pages fill a 128-line row.
///   column = L[0] | L[5:2] << 1 | L[7:6] << 5,  pair selector = L[1],
///   row group = L >> 8 (high bank bits, then row).
inline PhysicalLocation map_skylake(LineAddress line, const Geometry& geom) {
  check_range(line, geom);
  if (geom.row_size_lines != 128) throw ConfigError("skylake mapping needs 128-line rows");
  if (geom.banks_per_channel < 2) throw ConfigError("skylake mapping needs at least 2 banks");
  auto [ch, l] = detail::split_channel(line.value, geom.channel_bits());
  const unsigned bb = geom.bank_bits();
  const std::uint64_t column = (l & 1) | (((l >> 2) & 15) << 1) | (((l >> 6) & 3) << 5);
  const std::uint64_t sel = (l >> 1) & 1;
  const std::uint64_t group = l >> 8;
  const std::uint64_t row = group >> (bb - 1);
  const std::uint64_t raw_bank = ((group & low_mask(bb - 1)) << 1) | sel;
  return {ch, raw_bank ^ detail::bank_hash(row, bb), row, column};
}

inline LineAddress unmap_skylake(const PhysicalLocation& loc, const Geometry& geom) {
  check_range(loc, geom);
  if (geom.row_size_lines != 128) throw ConfigError("skylake mapping needs 128-line rows");
  const unsigned bb = geom.bank_bits();
  const std::uint64_t raw_bank = loc.bank ^ detail::bank_hash(loc.row, bb);
  const std::uint64_t sel = raw_bank & 1;
  const std::uint64_t group = (loc.row << (bb - 1)) | (raw_bank >> 1);
  const std::uint64_t c = loc.column;
  const std::uint64_t l = (group << 8) | (((c >> 5) & 3) << 6) | (((c >> 1) & 15) << 2) | (sel << 1) | (c & 1);
  return {detail::join_channel(loc.channel, l, geom.channel_bits())};
}

/// Minimalist open page: 4-line chunks round-robin across all banks; chunks of
/// consecutive pages at the same bank position share a row.
inline constexpr unsigned kMopChunkBits = 2;

inline PhysicalLocation map_mop(LineAddress line, const Geometry& geom) {
  check_range(line, geom);
  if (geom.banks_per_channel < 2) throw ConfigError("mop mapping needs at least 2 banks");
  if (geom.column_bits() < kMopChunkBits) throw ConfigError("mop mapping needs rows of at least 4 lines");
  auto [ch, l] = detail::split_channel(line.value, geom.channel_bits());
  const unsigned bb = geom.bank_bits(), cb = geom.column_bits();
  const std::uint64_t raw_bank = (l >> kMopChunkBits) & low_mask(bb);
  const std::uint64_t col_hi = (l >> (kMopChunkBits + bb)) & low_mask(cb - kMopChunkBits);
  const std::uint64_t row = l >> (bb + cb);
  return {ch, raw_bank ^ detail::bank_hash(row, bb), row, (col_hi << kMopChunkBits) | (l & low_mask(kMopChunkBits))};
}

inline LineAddress unmap_mop(const PhysicalLocation& loc, const Geometry& geom) {
  check_range(loc, geom);
  const unsigned bb = geom.bank_bits(), cb = geom.column_bits();
  const std::uint64_t raw_bank = loc.bank ^ detail::bank_hash(loc.row, bb);
  const std::uint64_t col_hi = loc.column >> kMopChunkBits;
  const std::uint64_t l = (loc.row << (bb + cb)) | (col_hi << (kMopChunkBits + bb)) | (raw_bank << kMopChunkBits) |
                          (loc.column & low_mask(kMopChunkBits));
  return {detail::join_channel(loc.channel, l, geom.channel_bits())};
}

inline PhysicalLocation map_static(StaticScheme s, LineAddress line, const Geometry& geom) {
  switch (s) {
    case StaticScheme::linear: return map_linear(line, geom);
    case StaticScheme::coffee_lake: return map_coffee_lake(line, geom);
    case StaticScheme::skylake: return map_skylake(line, geom);
    case StaticScheme::mop: return map_mop(line, geom);
  }
  throw ConfigError("unknown static scheme");
}

inline LineAddress unmap_static(StaticScheme s, const PhysicalLocation& loc, const Geometry& geom) {
  switch (s) {
    case StaticScheme::linear: return unmap_linear(loc, geom);
    case StaticScheme::coffee_lake: return unmap_coffee_lake(loc, geom);
    case StaticScheme::skylake: return unmap_skylake(loc, geom);
    case StaticScheme::mop: return unmap_mop(loc, geom);
  }
  throw ConfigError("unknown static scheme");
}

struct BijectionResult {
  bool ok = true;
  // On failure: two lines landing on the same location, or one line landing
  // outside the geometry (second == first in that case).
  std::optional<std::pair<LineAddress, LineAddress>> counterexample;

  explicit operator bool() const { return ok; }
};

/// Exhaustive one-to-one check of `map` over the whole address space.
template <class MapFn>
BijectionResult verify_bijection(MapFn&& map, const Geometry& geom) {
  if (geom.line_addr_bits() > 24) throw ConfigError("geometry too large for an exhaustive bijection scan");
  constexpr std::uint32_t kUnseen = 0xffffffffu;
  const std::uint64_t n = geom.total_lines();
  std::vector<std::uint32_t> owner(n, kUnseen);
  for (std::uint64_t v = 0; v < n; ++v) {
    const PhysicalLocation loc = map(LineAddress{v});
    if (!geom.contains(loc)) return {false, std::pair{LineAddress{v}, LineAddress{v}}};
    auto& slot = owner[geom.flat_location(loc)];
    if (slot != kUnseen) return {false, std::pair{LineAddress{slot}, LineAddress{v}}};
    slot = static_cast<std::uint32_t>(v);
  }
  // n distinct in-range images over an n-element space: onto as well.
  return {};
}

}  // namespace rubix
