#pragma once

// Access streams: synthetic kernels, Rowhammer attack patterns and CSV traces.
//
// Trace format, one record per line, `#` starts a comment:
//   arrival_ns,line_address_hex,op
//   100,0x1A2B,R

#include <charconv>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rubix/common.hpp"
#include "rubix/geometry.hpp"
#include "rubix/rubix_s.hpp"

namespace rubix {

inline constexpr std::uint64_t kLineBytes = 64;
inline constexpr std::uint64_t kPageLines = 64;  // 4 KB

enum class Op : std::uint8_t { read, write };

struct TraceRecord {
  std::uint64_t arrival_ns = 0;
  std::uint64_t line = 0;
  Op op = Op::read;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Pull-style access stream. Arrival 0 means "issue when the previous request completes".
class AccessSource {
 public:
  virtual ~AccessSource() = default;
  virtual std::optional<TraceRecord> next() = 0;
};

inline std::vector<TraceRecord> drain(AccessSource& src) {
  std::vector<TraceRecord> out;
  while (auto r = src.next()) out.push_back(*r);
  return out;
}

class VectorSource final : public AccessSource {
 public:
  explicit VectorSource(std::vector<TraceRecord> records) : records_(std::move(records)) {}
  std::optional<TraceRecord> next() override {
    if (pos_ >= records_.size()) return std::nullopt;
    return records_[pos_++];
  }

 private:
  std::vector<TraceRecord> records_;
  std::size_t pos_ = 0;
};

enum class KernelKind { stream, stride, random };

inline std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::stream: return "stream";
    case KernelKind::stride: return "stride";
    case KernelKind::random: return "random";
  }
  return "?";
}

inline KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "stream") return KernelKind::stream;
  if (s == "stride") return KernelKind::stride;
  if (s == "random") return KernelKind::random;
  throw ConfigError("unknown kernel '" + std::string(s) + "'");
}

struct KernelSpec {
  KernelKind kind = KernelKind::stream;
  std::uint64_t footprint_bytes = 4ull << 20;
  std::uint64_t access_count = 1'000'000;
  std::uint64_t stride_lines = 64;
  std::uint64_t seed = 1;

  std::uint64_t footprint_lines() const { return footprint_bytes / kLineBytes; }

  void validate(const Geometry& geom) const {
    if (footprint_lines() == 0) throw ConfigError("kernel footprint must hold at least one line");
    if (footprint_lines() > geom.total_lines()) throw ConfigError("kernel footprint exceeds memory size");
    if (access_count == 0) throw ConfigError("kernel access count must be positive");
    if (kind == KernelKind::stride && (stride_lines == 0 || footprint_lines() % stride_lines != 0))
      throw ConfigError("stride must divide the footprint");
  }
};

/// Closed-loop synthetic kernel over lines [0, footprint).
class KernelSource final : public AccessSource {
 public:
  explicit KernelSource(KernelSpec spec) : spec_(spec), rng_(spec.seed) {}

  std::optional<TraceRecord> next() override {
    if (i_ >= spec_.access_count) return std::nullopt;
    const std::uint64_t n = spec_.footprint_lines();
    std::uint64_t line = 0;
    switch (spec_.kind) {
      case KernelKind::stream: line = i_ % n; break;
      case KernelKind::stride: {
        // Each pass visits one line per stride; the next pass shifts by one line.
        const std::uint64_t per_pass = n / spec_.stride_lines;
        const std::uint64_t pass = i_ / per_pass, idx = i_ % per_pass;
        line = idx * spec_.stride_lines + pass % spec_.stride_lines;
        break;
      }
      case KernelKind::random: line = uniform_below(rng_, n); break;
    }
    ++i_;
    return TraceRecord{0, line, Op::read};
  }

 private:
  KernelSpec spec_;
  Rng rng_;
  std::uint64_t i_ = 0;
};

inline std::vector<TraceRecord> gen_kernel(const KernelSpec& spec) {
  KernelSource src(spec);
  return drain(src);
}
inline std::vector<TraceRecord> gen_stream(KernelSpec spec) {
  spec.kind = KernelKind::stream;
  return gen_kernel(spec);
}
inline std::vector<TraceRecord> gen_stride(KernelSpec spec) {
  spec.kind = KernelKind::stride;
  return gen_kernel(spec);
}
inline std::vector<TraceRecord> gen_random(KernelSpec spec) {
  spec.kind = KernelKind::random;
  return gen_kernel(spec);
}

enum class AttackKind { single, double_sided, many_sided, half_double, flush_reload };

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::single: return "single";
    case AttackKind::double_sided: return "double";
    case AttackKind::many_sided: return "many";
    case AttackKind::half_double: return "half_double";
    case AttackKind::flush_reload: return "flush_reload";
  }
  return "?";
}

inline AttackKind parse_attack_kind(std::string_view s) {
  if (s == "single") return AttackKind::single;
  if (s == "double") return AttackKind::double_sided;
  if (s == "many") return AttackKind::many_sided;
  if (s == "half_double" || s == "half-double") return AttackKind::half_double;
  if (s == "flush_reload" || s == "flush-reload") return AttackKind::flush_reload;
  throw ConfigError("unknown attack pattern '" + std::string(s) + "'");
}

/// Rows are targeted in the address space the attacker sees (the configured
/// static or Rubix-S mapping); lines are chosen to land in those rows.
struct AttackSpec {
  AttackKind kind = AttackKind::single;
  std::uint64_t channel = 0;
  std::uint64_t bank = 0;
  std::uint64_t row = 1024;        // aggressor (single, flush+reload, half-double far row) or victim (double, many)
  std::uint64_t sides = 8;         // aggressors for many-sided
  std::uint64_t intensity = 0;     // activations per window for each aggressor; 0 = default
  std::uint64_t near_interval = 400;  // half-double: far activations per near (decoy) access
  std::uint64_t epochs = 100;

  /// Default intensity: 2x T_RH per aggressor; half-double uses 100x T_RH on
  /// the far aggressor.
  std::uint64_t effective_intensity(std::uint64_t t_rh) const {
    if (intensity) return intensity;
    return kind == AttackKind::half_double ? 100 * t_rh : 2 * t_rh;
  }
};

/// Paced attack stream: one pattern cycle repeats, with arrival times spread
/// so each aggressor reaches its intensity per refresh window.
class AttackSource final : public AccessSource {
 public:
  AttackSource(const AttackSpec& spec, const AddressMap& map, std::uint64_t t_rh, Tick refresh_interval, Tick t_rc)
      : spec_(spec) {
    const Geometry& g = map.geometry();
    const std::uint64_t rows = g.rows_per_bank;
    if (spec.bank >= g.banks_per_channel || spec.channel >= g.channels || spec.row >= rows)
      throw ConfigError("attack target outside geometry");
    auto line_at = [&](std::uint64_t row, std::uint64_t col = 0) {
      return map.unmap({spec.channel, spec.bank, row % rows, col}).value;
    };
    const std::uint64_t r = spec.row;
    // Far row in the same bank to force row-buffer conflicts.
    const std::uint64_t dummy = (r + rows / 2) % rows;
    std::uint64_t primary_per_cycle = 1;
    switch (spec.kind) {
      case AttackKind::single: cycle_ = {line_at(r), line_at(dummy)}; break;
      case AttackKind::double_sided: cycle_ = {line_at(r + rows - 1), line_at(r + 1)}; break;
      case AttackKind::many_sided:
        for (std::uint64_t i = 0; i < spec.sides; ++i) cycle_.push_back(line_at(r + 1 + 2 * i));
        break;
      case AttackKind::half_double: {
        // Far aggressor r, decoy near aggressor r+1, victim r+2 (distance 2).
        for (std::uint64_t i = 0; i < spec.near_interval; ++i) {
          cycle_.push_back(line_at(r));
          cycle_.push_back(line_at(dummy));
        }
        cycle_.push_back(line_at(r + 1));
        primary_per_cycle = spec.near_interval;
        break;
      }
      case AttackKind::flush_reload: cycle_ = {line_at(r, 0), line_at(dummy, 0)}; break;
    }
    const std::uint64_t intensity = spec.effective_intensity(t_rh);
    const long double records_per_window =
        static_cast<long double>(intensity) * static_cast<long double>(cycle_.size()) / primary_per_cycle;
    const long double spacing_ticks = static_cast<long double>(refresh_interval) / records_per_window;
    if (spacing_ticks < static_cast<long double>(t_rc))
      throw ConfigError("attack intensity exceeds the tRC-limited activation rate");
    spacing_ns_ = spacing_ticks / kTicksPerNs;
    end_ns_ = static_cast<std::uint64_t>(spec.epochs) * static_cast<std::uint64_t>(refresh_interval / kTicksPerNs);
  }

  std::optional<TraceRecord> next() override {
    const auto arrival = static_cast<std::uint64_t>(static_cast<long double>(i_) * spacing_ns_);
    if (arrival >= end_ns_) return std::nullopt;
    const std::uint64_t line = cycle_[i_ % cycle_.size()];
    ++i_;
    return TraceRecord{arrival, line, Op::read};
  }

  const std::vector<std::uint64_t>& cycle() const { return cycle_; }

 private:
  AttackSpec spec_;
  std::vector<std::uint64_t> cycle_;
  long double spacing_ns_ = 0;
  std::uint64_t end_ns_ = 0;
  std::uint64_t i_ = 0;
};

// ---- trace files ----

inline void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  char buf[64];
  for (const auto& r : records) {
    auto* p = std::to_chars(buf, buf + sizeof buf, r.arrival_ns).ptr;
    *p++ = ',';
    *p++ = '0';
    *p++ = 'x';
    auto* hex_begin = p;
    p = std::to_chars(p, buf + sizeof buf, r.line, 16).ptr;
    for (auto* c = hex_begin; c != p; ++c)
      if (*c >= 'a' && *c <= 'f') *c = static_cast<char>(*c - 'a' + 'A');
    *p++ = ',';
    *p++ = r.op == Op::read ? 'R' : 'W';
    *p++ = '\n';
    os.write(buf, p - buf);
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::vector<TraceRecord> parse_trace(std::istream& is, std::string_view name = "<trace>") {
  std::vector<TraceRecord> out;
  std::string raw;
  std::uint64_t lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(std::string(name) + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view s = raw;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto c1 = s.find(','), c2 = c1 == std::string_view::npos ? c1 : s.find(',', c1 + 1);
    if (c2 == std::string_view::npos || s.find(',', c2 + 1) != std::string_view::npos)
      fail("expected 3 comma-separated fields");
    const auto f_arr = detail::trim(s.substr(0, c1));
    auto f_addr = detail::trim(s.substr(c1 + 1, c2 - c1 - 1));
    const auto f_op = detail::trim(s.substr(c2 + 1));
    TraceRecord rec;
    if (auto [p, ec] = std::from_chars(f_arr.data(), f_arr.data() + f_arr.size(), rec.arrival_ns);
        ec != std::errc{} || p != f_arr.data() + f_arr.size() || f_arr.empty())
      fail("bad arrival time '" + std::string(f_arr) + "'");
    if (f_addr.size() > 2 && f_addr[0] == '0' && (f_addr[1] == 'x' || f_addr[1] == 'X')) f_addr.remove_prefix(2);
    else fail("line address must be hex with a 0x prefix");
    if (auto [p, ec] = std::from_chars(f_addr.data(), f_addr.data() + f_addr.size(), rec.line, 16);
        ec != std::errc{} || p != f_addr.data() + f_addr.size())
      fail("bad line address '" + std::string(f_addr) + "'");
    if (f_op == "R" || f_op == "r") rec.op = Op::read;
    else if (f_op == "W" || f_op == "w") rec.op = Op::write;
    else fail("op must be R or W");
    if (!out.empty() && rec.arrival_ns < out.back().arrival_ns)
      throw ValidationError(std::string(name) + ":" + std::to_string(lineno) + ": arrival times must be non-decreasing");
    out.push_back(rec);
  }
  return out;
}

inline std::vector<TraceRecord> parse_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");
  return parse_trace(in, path);
}

}  // namespace rubix
