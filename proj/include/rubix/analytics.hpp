#pragma once

// Run statistics: the SimReport, hot-row census, lines-per-hot-row
// characterization, run comparison, and JSON/CSV serialization.
//
// Hot-row counts aggregate over refresh windows: a row hot in two windows
// counts twice.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "rubix/common.hpp"
#include "rubix/mitigation.hpp"

namespace rubix {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::uint64_t kHotRowThreshold = 64;

/// For each threshold, rows whose count reaches it.
inline std::vector<std::uint64_t> hot_row_census(std::span<const std::uint32_t> counts,
                                                 std::span<const std::uint64_t> thresholds) {
  std::vector<std::uint64_t> out(thresholds.size(), 0);
  for (auto c : counts) {
    if (c == 0) continue;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (c >= thresholds[i]) ++out[i];
  }
  return out;
}

/// Census restricted to an index subset (the rows touched in a window).
inline std::vector<std::uint64_t> hot_row_census(std::span<const std::uint32_t> counts,
                                                 std::span<const std::uint64_t> rows,
                                                 std::span<const std::uint64_t> thresholds) {
  std::vector<std::uint64_t> out(thresholds.size(), 0);
  for (auto r : rows) {
    const auto c = counts[r];
    if (c == 0) continue;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (c >= thresholds[i]) ++out[i];
  }
  return out;
}

struct LinesPerHotRow {
  // Hot rows whose distinct activating lines fall in [1,32), [32,64), [64,inf).
  std::uint64_t lines_1_32 = 0;
  std::uint64_t lines_32_64 = 0;
  std::uint64_t lines_64_128 = 0;
  std::uint64_t hot_rows = 0;
  std::uint64_t total_lines = 0;

  double mean() const { return hot_rows ? static_cast<double>(total_lines) / static_cast<double>(hot_rows) : 0.0; }

  void add(std::uint64_t distinct_lines) {
    ++hot_rows;
    total_lines += distinct_lines;
    if (distinct_lines < 32) ++lines_1_32;
    else if (distinct_lines < 64) ++lines_32_64;
    else ++lines_64_128;
  }

  void merge(const LinesPerHotRow& o) {
    lines_1_32 += o.lines_1_32;
    lines_32_64 += o.lines_32_64;
    lines_64_128 += o.lines_64_128;
    hot_rows += o.hot_rows;
    total_lines += o.total_lines;
  }
};

/// Per-row, per-column activation counts for one window.
using LineAttribution = std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>;

inline LinesPerHotRow lines_per_hot_row(const LineAttribution& attribution, std::uint64_t threshold = kHotRowThreshold) {
  LinesPerHotRow out;
  for (const auto& [row, cols] : attribution) {
    std::uint64_t total = 0, distinct = 0;
    for (auto c : cols) {
      total += c;
      distinct += c > 0;
    }
    if (total >= threshold) out.add(distinct);
  }
  return out;
}

struct RowActivationStats {
  std::uint64_t rows = 0;
  double mean = 0;
  double stdev = 0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
};

inline RowActivationStats row_activation_stats(std::span<const std::uint32_t> counts,
                                               std::span<const std::uint64_t> rows) {
  RowActivationStats s;
  double sum = 0, sq = 0;
  s.min = std::numeric_limits<std::uint64_t>::max();
  for (auto r : rows) {
    const double c = counts[r];
    if (counts[r] == 0) continue;
    ++s.rows;
    sum += c;
    sq += c * c;
    s.min = std::min<std::uint64_t>(s.min, counts[r]);
    s.max = std::max<std::uint64_t>(s.max, counts[r]);
  }
  if (s.rows == 0) {
    s.min = 0;
    return s;
  }
  const double n = static_cast<double>(s.rows);
  s.mean = sum / n;
  s.stdev = std::sqrt(std::max(0.0, sq / n - s.mean * s.mean));
  return s;
}

struct EpochSnapshot {
  std::uint64_t index = 0;
  Tick start = 0;
  Tick end = 0;
  bool partial = false;
  std::uint64_t accesses = 0;
  std::uint64_t activations = 0;
  std::uint64_t row_buffer_hits = 0;
  std::uint64_t mitigation_events = 0;
  std::vector<std::uint64_t> hot_rows;  // per configured threshold
  std::uint64_t flips = 0;
};

struct SimReport {
  std::string workload;
  std::string mapping;
  std::string mitigation;
  std::uint64_t t_rh = 0;
  std::uint64_t seed = 0;

  std::uint64_t total_accesses = 0;
  std::uint64_t total_activations = 0;  // demand activations
  std::uint64_t row_buffer_hits = 0;
  std::vector<std::uint64_t> hot_row_thresholds;
  std::vector<std::uint64_t> hot_rows;  // aligned with hot_row_thresholds
  std::uint64_t hot_rows_64 = 0;
  std::uint64_t hot_rows_512 = 0;
  std::uint64_t unique_rows_touched = 0;
  RowActivationStats activations_per_row;
  std::optional<LinesPerHotRow> lines_per_hot_row;

  std::map<std::string, std::uint64_t> mitigation_events;
  std::uint64_t mitigation_activations = 0;
  std::uint64_t remap_swaps = 0;
  std::uint64_t remap_skips = 0;
  std::uint64_t remap_activations = 0;
  std::uint64_t remap_cas_ops = 0;
  std::uint64_t key_rotations = 0;

  Tick channel_blocked = 0;
  Tick completion_time = 0;

  std::vector<Flip> flips;
  std::vector<EpochSnapshot> epochs;

  std::uint64_t row_buffer_misses() const { return total_accesses - row_buffer_hits; }
  double hit_rate() const {
    return total_accesses ? static_cast<double>(row_buffer_hits) / static_cast<double>(total_accesses) : 0.0;
  }
  std::uint64_t total_mitigation_events() const {
    std::uint64_t n = 0;
    for (const auto& [_, v] : mitigation_events) n += v;
    return n;
  }
  std::uint64_t hot_rows_at(std::uint64_t threshold) const {
    for (std::size_t i = 0; i < hot_row_thresholds.size(); ++i)
      if (hot_row_thresholds[i] == threshold) return hot_rows[i];
    throw ConfigError("hot-row threshold " + std::to_string(threshold) + " was not tracked");
  }
};

// ---- comparison ----

struct ComparisonRow {
  std::string label;
  double hit_rate = 0;
  double activations_ratio = 1;
  double hot_rows_ratio = 1;
  double mitigation_events_ratio = 1;
  double blocked_ratio = 1;
  double slowdown = 1;  // completion-time ratio to the baseline
};

namespace detail {
inline double ratio(double v, double base) {
  if (base == 0) return v == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return v / base;
}
}  // namespace detail

/// Normalize each report to `reports[baseline]`. All reports must share a workload.
inline std::vector<ComparisonRow> compare_runs(const std::vector<SimReport>& reports, std::size_t baseline = 0) {
  if (reports.empty()) return {};
  if (baseline >= reports.size()) throw ValidationError("baseline index out of range");
  const auto& b = reports[baseline];
  std::vector<ComparisonRow> out;
  for (const auto& r : reports) {
    if (r.workload != b.workload)
      throw ValidationError("cannot compare runs of different workloads ('" + r.workload + "' vs '" + b.workload + "')");
    ComparisonRow row;
    row.label = r.mapping + "/" + r.mitigation + "/trh" + std::to_string(r.t_rh);
    row.hit_rate = r.hit_rate();
    row.activations_ratio = detail::ratio(static_cast<double>(r.total_activations), static_cast<double>(b.total_activations));
    row.hot_rows_ratio = detail::ratio(static_cast<double>(r.hot_rows_64), static_cast<double>(b.hot_rows_64));
    row.mitigation_events_ratio =
        detail::ratio(static_cast<double>(r.total_mitigation_events()), static_cast<double>(b.total_mitigation_events()));
    row.blocked_ratio = detail::ratio(static_cast<double>(r.channel_blocked), static_cast<double>(b.channel_blocked));
    row.slowdown = detail::ratio(static_cast<double>(r.completion_time), static_cast<double>(b.completion_time));
    out.push_back(row);
  }
  return out;
}

// ---- serialization ----

inline nlohmann::json to_json(const LinesPerHotRow& l) {
  return {{"hot_rows", l.hot_rows},
          {"lines_1_32", l.lines_1_32},
          {"lines_32_64", l.lines_32_64},
          {"lines_64_128", l.lines_64_128},
          {"mean", l.mean()}};
}

inline nlohmann::json to_json(const SimReport& r) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["workload"] = r.workload;
  j["mapping"] = r.mapping;
  j["mitigation"] = r.mitigation;
  j["t_rh"] = r.t_rh;
  j["seed"] = r.seed;
  j["total_accesses"] = r.total_accesses;
  j["total_activations"] = r.total_activations;
  j["row_buffer_hits"] = r.row_buffer_hits;
  j["row_buffer_misses"] = r.row_buffer_misses();
  j["hit_rate"] = r.hit_rate();
  json hot = json::object();
  for (std::size_t i = 0; i < r.hot_row_thresholds.size(); ++i) hot[std::to_string(r.hot_row_thresholds[i])] = r.hot_rows[i];
  j["hot_rows"] = hot;
  j["hot_rows_64"] = r.hot_rows_64;
  j["hot_rows_512"] = r.hot_rows_512;
  j["unique_rows_touched"] = r.unique_rows_touched;
  j["activations_per_row"] = {{"rows", r.activations_per_row.rows},
                              {"mean", r.activations_per_row.mean},
                              {"stdev", r.activations_per_row.stdev},
                              {"min", r.activations_per_row.min},
                              {"max", r.activations_per_row.max}};
  j["lines_per_hot_row"] = r.lines_per_hot_row ? to_json(*r.lines_per_hot_row) : json(nullptr);
  j["mitigation_events"] = r.mitigation_events;
  j["mitigation_activations"] = r.mitigation_activations;
  j["remap"] = {{"swaps", r.remap_swaps},
                {"skips", r.remap_skips},
                {"activations", r.remap_activations},
                {"cas_ops", r.remap_cas_ops},
                {"key_rotations", r.key_rotations}};
  j["channel_blocked_ns"] = ticks_to_ns(r.channel_blocked);
  j["completion_time_ns"] = ticks_to_ns(r.completion_time);
  json flips = json::array();
  for (const auto& f : r.flips)
    flips.push_back({{"epoch", f.epoch}, {"bank", f.flat_bank}, {"row", f.row}, {"count", f.count}});
  j["flips"] = flips;
  json epochs = json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"index", e.index},
                      {"start_ns", ticks_to_ns(e.start)},
                      {"end_ns", ticks_to_ns(e.end)},
                      {"partial", e.partial},
                      {"accesses", e.accesses},
                      {"activations", e.activations},
                      {"row_buffer_hits", e.row_buffer_hits},
                      {"mitigation_events", e.mitigation_events},
                      {"hot_rows", e.hot_rows},
                      {"flips", e.flips}});
  j["epochs"] = epochs;
  return j;
}

inline std::string report_json_string(const SimReport& r) { return to_json(r).dump(2) + "\n"; }

inline constexpr const char* kReportCsvHeader =
    "workload,mapping,mitigation,t_rh,seed,accesses,activations,row_buffer_hits,hit_rate,hot_rows_64,hot_rows_512,"
    "unique_rows,mitigation_events,mitigation_activations,remap_swaps,remap_skips,remap_activations,"
    "channel_blocked_ns,completion_time_ns,flips";

namespace detail {
inline std::string fmt_double(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
}  // namespace detail

inline std::string report_csv_row(const SimReport& r) {
  std::ostringstream os;
  os << r.workload << ',' << r.mapping << ',' << r.mitigation << ',' << r.t_rh << ',' << r.seed << ','
     << r.total_accesses << ',' << r.total_activations << ',' << r.row_buffer_hits << ','
     << detail::fmt_double(r.hit_rate()) << ',' << r.hot_rows_64 << ',' << r.hot_rows_512 << ','
     << r.unique_rows_touched << ',' << r.total_mitigation_events() << ',' << r.mitigation_activations << ','
     << r.remap_swaps << ',' << r.remap_skips << ',' << r.remap_activations << ','
     << detail::fmt_double(ticks_to_ns(r.channel_blocked)) << ',' << detail::fmt_double(ticks_to_ns(r.completion_time))
     << ',' << r.flips.size();
  return os.str();
}

inline void write_report_csv(std::ostream& os, const std::vector<SimReport>& reports) {
  os << kReportCsvHeader << '\n';
  for (const auto& r : reports) os << report_csv_row(r) << '\n';
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "label,hit_rate,activations_ratio,hot_rows_ratio,mitigation_events_ratio,blocked_ratio,slowdown\n";
  for (const auto& r : rows)
    os << r.label << ',' << detail::fmt_double(r.hit_rate) << ',' << detail::fmt_double(r.activations_ratio) << ','
       << detail::fmt_double(r.hot_rows_ratio) << ',' << detail::fmt_double(r.mitigation_events_ratio) << ','
       << detail::fmt_double(r.blocked_ratio) << ',' << detail::fmt_double(r.slowdown) << '\n';
}

}  // namespace rubix
