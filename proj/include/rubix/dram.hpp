#pragma once

// Multi-bank DRAM timing model: row buffers with an open-adaptive policy,
// tRC-spaced activations, per-channel blocking for migrations, and epoch-aligned
// activation windows.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rubix/common.hpp"
#include "rubix/geometry.hpp"

namespace rubix {

struct TimingParams {
  Tick t_rcd = ns_to_ticks(14.2);
  Tick t_cl = ns_to_ticks(14.2);
  Tick t_rp = ns_to_ticks(14.2);
  Tick t_rc = ns_to_ticks(45);
  // One column read or write during a bulk row transfer.
  Tick t_cas_op = ns_to_ticks(5);
  Tick refresh_interval = ns_to_ticks(64'000'000);

  void validate() const {
    if (t_rcd <= 0 || t_cl <= 0 || t_rp <= 0 || t_rc <= 0 || t_cas_op <= 0 || refresh_interval <= 0)
      throw ConfigError("timing parameters must be positive");
    if (t_rc < t_rcd + t_rp) throw ConfigError("tRC must be at least tRCD + tRP");
  }

  /// Upper bound on activations one bank can perform in a refresh window.
  std::uint64_t max_activations_per_window() const { return static_cast<std::uint64_t>(refresh_interval / t_rc) + 1; }
};

enum class PagePolicy {
  open_adaptive,  // close after kMaxOpenAccesses accesses
  open_uncapped,  // keep the row open until a conflict
};

inline constexpr std::uint32_t kMaxOpenAccesses = 16;

struct BankState {
  std::optional<std::uint64_t> open_row;
  std::uint32_t accesses_since_open = 0;
  Tick earliest_next_activate = 0;
};

struct AccessResult {
  bool hit = false;
  bool caused_activation = false;
  Tick activation_time = 0;
  Tick completion_time = 0;
};

/// Per-row activation counts inside the current refresh window.
class ActivationWindow {
 public:
  explicit ActivationWindow(std::uint64_t rows = 0) : counts_(rows, 0) {}

  std::uint32_t increment(std::uint64_t row, std::uint32_t by = 1) {
    auto& c = counts_[row];
    if (c == 0) touched_.push_back(row);
    c += by;
    return c;
  }

  std::uint32_t count(std::uint64_t row) const { return counts_[row]; }
  void set(std::uint64_t row, std::uint32_t value) {
    if (counts_[row] == 0 && value != 0) touched_.push_back(row);
    counts_[row] = value;
  }

  /// Rows with a non-zero count this window (may contain rows since zeroed by set()).
  std::span<const std::uint64_t> touched() const { return touched_; }
  std::span<const std::uint32_t> counts() const { return counts_; }
  std::uint64_t size() const { return counts_.size(); }
  Tick window_start() const { return window_start_; }

  void reset(Tick new_start) {
    for (auto r : touched_) counts_[r] = 0;
    touched_.clear();
    window_start_ = new_start;
  }

 private:
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint64_t> touched_;
  Tick window_start_ = 0;
};

class Dram {
 public:
  /// `physical_rows_per_bank` may exceed the geometry to host reserved rows.
  Dram(const Geometry& geom, TimingParams timing, PagePolicy policy, std::uint64_t physical_rows_per_bank = 0)
      : geom_(geom),
        timing_(timing),
        policy_(policy),
        rows_per_bank_(physical_rows_per_bank ? physical_rows_per_bank : geom.rows_per_bank),
        banks_(geom.total_banks()),
        channel_free_(geom.channels, 0),
        window_(geom.total_banks() * rows_per_bank_) {
    timing_.validate();
  }

  const TimingParams& timing() const { return timing_; }
  PagePolicy policy() const { return policy_; }
  std::uint64_t rows_per_bank() const { return rows_per_bank_; }
  std::uint64_t row_index(std::uint64_t flat_bank, std::uint64_t row) const { return flat_bank * rows_per_bank_ + row; }

  const BankState& bank(std::uint64_t flat_bank) const { return banks_[flat_bank]; }
  ActivationWindow& window() { return window_; }
  const ActivationWindow& window() const { return window_; }

  /// Whether an access to (flat_bank, row) would be served from the row buffer.
  bool would_hit(std::uint64_t flat_bank, std::uint64_t row) const {
    const auto& b = banks_[flat_bank];
    return b.open_row == row && (policy_ == PagePolicy::open_uncapped || b.accesses_since_open < kMaxOpenAccesses);
  }

  /// Serve one column access. Misses precharge, activate (respecting tRC since
  /// the previous activation of the bank) and then read.
  AccessResult access(std::uint64_t channel, std::uint64_t flat_bank, std::uint64_t row, Tick t) {
    t = std::max(t, channel_free_[channel]);
    auto& b = banks_[flat_bank];
    AccessResult r;
    if (would_hit(flat_bank, row)) {
      ++b.accesses_since_open;
      r.hit = true;
      r.completion_time = t + timing_.t_cl;
      return r;
    }
    Tick ready = t;
    if (b.open_row) ready += timing_.t_rp;
    const Tick act = std::max(ready, b.earliest_next_activate);
    b.earliest_next_activate = act + timing_.t_rc;
    b.open_row = row;
    b.accesses_since_open = 1;
    window_.increment(row_index(flat_bank, row));
    r.caused_activation = true;
    r.activation_time = act;
    r.completion_time = act + timing_.t_rcd + timing_.t_cl;
    return r;
  }

  /// No request on `channel` completes before the returned release time.
  /// Overlapping blocks serialize.
  Tick block_channel(std::uint64_t channel, Tick duration, Tick now) {
    auto& f = channel_free_[channel];
    f = std::max(f, now) + std::max<Tick>(duration, 0);
    return f;
  }

  Tick channel_free(std::uint64_t channel) const { return channel_free_[channel]; }

  /// Close the bank's row and hold off its next activation until `until`.
  void occupy_bank(std::uint64_t flat_bank, Tick until) {
    auto& b = banks_[flat_bank];
    b.open_row.reset();
    b.accesses_since_open = 0;
    b.earliest_next_activate = std::max(b.earliest_next_activate, until);
  }

  void close_bank(std::uint64_t flat_bank) {
    banks_[flat_bank].open_row.reset();
    banks_[flat_bank].accesses_since_open = 0;
  }

 private:
  Geometry geom_;
  TimingParams timing_;
  PagePolicy policy_;
  std::uint64_t rows_per_bank_;
  std::vector<BankState> banks_;
  std::vector<Tick> channel_free_;
  ActivationWindow window_;
};

struct Request {
  std::uint64_t id = 0;  // arrival order
  Tick arrival = 0;
  std::uint64_t channel = 0;
  std::uint64_t flat_bank = 0;
  std::uint64_t row = 0;
};

/// First-ready FCFS: the oldest arrived request that hits an open row, else the
/// oldest arrived request. Returns the index into `queue`.
inline std::size_t schedule(std::span<const Request> queue, Tick now, const Dram& dram) {
  if (queue.empty()) throw StateError("schedule on an empty queue");
  std::optional<std::size_t> oldest, oldest_hit;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const auto& q = queue[i];
    if (q.arrival > now) continue;
    if (!oldest || q.id < queue[*oldest].id) oldest = i;
    if (dram.would_hit(q.flat_bank, q.row) && (!oldest_hit || q.id < queue[*oldest_hit].id)) oldest_hit = i;
  }
  if (oldest_hit) return *oldest_hit;
  if (oldest) return *oldest;
  // Nothing has arrived yet: earliest arrival.
  return static_cast<std::size_t>(std::min_element(queue.begin(), queue.end(), [](const Request& a, const Request& b) {
                                    return a.arrival != b.arrival ? a.arrival < b.arrival : a.id < b.id;
                                  }) - queue.begin());
}

}  // namespace rubix
