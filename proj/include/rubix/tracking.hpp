#pragma once

// Activation trackers: a Misra-Gries frequent-items summary and an exact
// per-row counter table. Both signal when a row reaches the tracker threshold
// and then reset that row's count.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rubix/common.hpp"

namespace rubix {

struct TrackerThreshold {
  std::uint64_t t_rh = 128;
  std::uint64_t tracker_threshold = 64;

  static TrackerThreshold half(std::uint64_t t_rh) { return {t_rh, std::max<std::uint64_t>(1, t_rh / 2)}; }
  static TrackerThreshold third(std::uint64_t t_rh) { return {t_rh, std::max<std::uint64_t>(1, t_rh / 3)}; }
};

/// Textbook Misra-Gries with reset-on-signal.
///
/// Counters are stored as `value - floor_`, so "decrement every entry" is a
/// single increment of floor_ followed by evicting the entries that hit zero.
/// An entry whose estimate is zero (just signaled, or just decremented out) is
/// a free slot. Undercount of any row is at most inserts / (capacity + 1).
class MisraGries {
 public:
  MisraGries(std::size_t capacity, std::uint64_t threshold) : capacity_(capacity), threshold_(threshold) {
    if (capacity == 0) throw ConfigError("Misra-Gries capacity must be positive");
    if (threshold == 0) throw ConfigError("tracker threshold must be positive");
  }

  /// Returns true when `row`'s estimate reaches the threshold (entry reset).
  bool insert(std::uint64_t row) {
    ++inserts_;
    if (auto it = values_.find(row); it != values_.end()) {
      bump(it);
      return check(it);
    }
    if (values_.size() >= capacity_ && !reclaim_zero()) {
      // Table full of positive counts: decrement all (and the newcomer).
      ++floor_;
      evict_bucket(floor_);
      ++decrements_;
      return false;
    }
    auto [it, _] = values_.emplace(row, floor_);
    bump(it);
    return check(it);
  }

  std::uint64_t estimate(std::uint64_t row) const {
    auto it = values_.find(row);
    return it == values_.end() ? 0 : it->second - floor_;
  }

  void reset() {
    values_.clear();
    buckets_.clear();
    floor_ = 0;
    inserts_ = 0;
    decrements_ = 0;
  }

  std::size_t capacity() const { return capacity_; }
  std::uint64_t threshold() const { return threshold_; }
  std::size_t resident() const { return values_.size(); }
  std::uint64_t inserts() const { return inserts_; }
  std::uint64_t decrements() const { return decrements_; }
  bool empty() const { return values_.empty(); }

 private:
  using Map = std::unordered_map<std::uint64_t, std::uint64_t>;

  void bump(Map::iterator it) {
    unlink(it->first, it->second);
    ++it->second;
    buckets_[it->second].insert(it->first);
  }

  bool check(Map::iterator it) {
    if (it->second - floor_ < threshold_) return false;
    unlink(it->first, it->second);
    it->second = floor_;
    buckets_[floor_].insert(it->first);
    return true;
  }

  void unlink(std::uint64_t row, std::uint64_t value) {
    auto b = buckets_.find(value);
    if (b == buckets_.end()) return;
    b->second.erase(row);
    if (b->second.empty()) buckets_.erase(b);
  }

  bool reclaim_zero() {
    auto b = buckets_.find(floor_);
    if (b == buckets_.end()) return false;
    const std::uint64_t victim = *b->second.begin();
    b->second.erase(b->second.begin());
    if (b->second.empty()) buckets_.erase(b);
    values_.erase(victim);
    return true;
  }

  void evict_bucket(std::uint64_t value) {
    // Entries at the old floor were already zero; after the decrement anything
    // at `value` is zero too. Drop both.
    for (std::uint64_t v : {value - 1, value}) {
      auto b = buckets_.find(v);
      if (b == buckets_.end()) continue;
      for (auto row : b->second) values_.erase(row);
      buckets_.erase(b);
    }
  }

  std::size_t capacity_;
  std::uint64_t threshold_;
  std::uint64_t floor_ = 0;
  std::uint64_t inserts_ = 0;
  std::uint64_t decrements_ = 0;
  Map values_;
  std::unordered_map<std::uint64_t, std::unordered_set<std::uint64_t>> buckets_;
};

/// One exact counter per row. Signals at every multiple of the threshold.
class PerRowTracker {
 public:
  PerRowTracker(std::uint64_t rows, std::uint64_t threshold) : counts_(rows, 0), threshold_(threshold) {
    if (threshold == 0) throw ConfigError("tracker threshold must be positive");
  }

  bool insert(std::uint64_t row) {
    auto& c = counts_.at(row);
    if (c == 0) touched_.push_back(row);
    return ++c % threshold_ == 0;
  }

  std::uint64_t count(std::uint64_t row) const { return counts_.at(row); }
  std::uint64_t threshold() const { return threshold_; }
  bool empty() const { return touched_.empty(); }

  void reset() {
    for (auto r : touched_) counts_[r] = 0;
    touched_.clear();
  }

 private:
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint64_t> touched_;
  std::uint64_t threshold_;
};

/// Capacity making the Misra-Gries slack N/capacity at most threshold/2 for a
/// bank that can activate at most `max_activations` times per window.
inline std::size_t default_mg_capacity(std::uint64_t max_activations, std::uint64_t threshold) {
  const std::uint64_t half = std::max<std::uint64_t>(1, threshold / 2);
  return static_cast<std::size_t>((max_activations + half - 1) / half);
}

struct GuaranteeReport {
  bool ok = true;
  std::uint64_t window_total = 0;
  std::uint64_t bound = 0;  // threshold + window_total / capacity
  std::vector<std::uint64_t> escaped;
};

/// Replays `trace` (one window) through a Misra-Gries tracker next to an exact
/// counter and lists rows whose true count exceeded the soundness bound
/// without ever being signaled.
inline GuaranteeReport tracker_guarantee_check(const std::vector<std::uint64_t>& trace, std::size_t capacity,
                                               std::uint64_t threshold) {
  MisraGries mg(capacity, threshold);
  std::unordered_map<std::uint64_t, std::uint64_t> exact;
  std::unordered_set<std::uint64_t> signaled;
  for (auto row : trace) {
    ++exact[row];
    if (mg.insert(row)) signaled.insert(row);
  }
  GuaranteeReport rep;
  rep.window_total = trace.size();
  rep.bound = threshold + trace.size() / capacity;
  for (const auto& [row, n] : exact)
    if (n > rep.bound && !signaled.contains(row)) rep.escaped.push_back(row);
  std::sort(rep.escaped.begin(), rep.escaped.end());
  rep.ok = rep.escaped.empty();
  return rep;
}

}  // namespace rubix
