#pragma once

// Run configuration: a versioned JSON document describing geometry, timing,
// mapping, mitigation, workload and analytics options.

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rubix/simulator.hpp"
#include "rubix/workloads.hpp"

namespace rubix {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20231019;
inline constexpr std::uint64_t kSeedTagWorkload = 4;

enum class WorkloadKind { kernel, attack, trace };

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kernel;
  KernelSpec kernel;
  AttackSpec attack;
  std::string trace_path;
};

struct RunConfig {
  SimConfig sim;
  WorkloadConfig workload;

  /// Stable description used to pair runs in comparisons.
  std::string workload_label() const {
    switch (workload.kind) {
      case WorkloadKind::kernel:
        return std::string(to_string(workload.kernel.kind)) + "/fp" + std::to_string(workload.kernel.footprint_bytes) +
               "/n" + std::to_string(workload.kernel.access_count);
      case WorkloadKind::attack:
        return "attack/" + std::string(to_string(workload.attack.kind)) + "/row" + std::to_string(workload.attack.row);
      case WorkloadKind::trace: return "trace/" + std::filesystem::path(workload.trace_path).filename().string();
    }
    return "?";
  }

  void validate() const {
    sim.geometry.validate();
    sim.timing.validate();
    sim.mitigation.validate();
    if (sim.mapping.kind == MappingKind::rubix_s) {
      check_gang_size(sim.mapping.gang_size);
      check_cipher_width(sim.geometry.line_addr_bits() - log2_exact(sim.mapping.gang_size));
    }
    if (sim.mapping.kind == MappingKind::rubix_d) rubix_d_layout(sim.mapping.rubix_d, sim.geometry);
    if (sim.hot_row_thresholds.empty()) throw ConfigError("at least one hot-row threshold is required");
    for (auto t : sim.hot_row_thresholds)
      if (t == 0) throw ConfigError("hot-row thresholds must be positive");
    if (workload.kind == WorkloadKind::kernel) workload.kernel.validate(sim.geometry);
    if (workload.kind == WorkloadKind::attack && workload.attack.epochs == 0)
      throw ConfigError("attack must run for at least one epoch");
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok |= (k == a);
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline Geometry parse_geometry(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "baseline") return Geometry::baseline();
    if (s == "illustration") return Geometry::illustration();
    if (s == "test16") return Geometry::test16();
    throw ConfigError("unknown geometry preset '" + s + "'");
  }
  check_keys(j, "geometry", {"channels", "banks_per_channel", "rows_per_bank", "row_size_lines"});
  Geometry g;
  g.channels = get_or<std::uint64_t>(j, "channels", g.channels);
  g.banks_per_channel = get_or<std::uint64_t>(j, "banks_per_channel", g.banks_per_channel);
  g.rows_per_bank = get_or<std::uint64_t>(j, "rows_per_bank", g.rows_per_bank);
  g.row_size_lines = get_or<std::uint64_t>(j, "row_size_lines", g.row_size_lines);
  return g;
}

inline TimingParams parse_timing(const json& j) {
  check_keys(j, "timing", {"t_rcd_ns", "t_cl_ns", "t_rp_ns", "t_rc_ns", "t_cas_op_ns", "refresh_interval_ns"});
  TimingParams t;
  auto f = [&](const char* k, Tick& field) { field = ns_to_ticks(get_or<double>(j, k, ticks_to_ns(field))); };
  f("t_rcd_ns", t.t_rcd);
  f("t_cl_ns", t.t_cl);
  f("t_rp_ns", t.t_rp);
  f("t_rc_ns", t.t_rc);
  f("t_cas_op_ns", t.t_cas_op);
  f("refresh_interval_ns", t.refresh_interval);
  return t;
}

inline MappingConfig parse_mapping(const json& j) {
  if (j.is_string()) return MappingConfig::parse(j.get<std::string>());
  check_keys(j, "mapping", {"scheme", "base", "remap_probability", "segments", "gangs_per_row"});
  MappingConfig m = MappingConfig::parse(get_or<std::string>(j, "scheme", "coffeelake"));
  if (m.kind != MappingKind::static_map) m.scheme = parse_static_scheme(get_or<std::string>(j, "base", "coffeelake"));
  m.rubix_d.remap_probability = get_or<double>(j, "remap_probability", m.rubix_d.remap_probability);
  m.rubix_d.segments = get_or<std::uint64_t>(j, "segments", m.rubix_d.segments);
  m.rubix_d.gangs_per_row = get_or<std::uint64_t>(j, "gangs_per_row", m.rubix_d.gangs_per_row);
  return m;
}

inline MitigationConfig parse_mitigation(const json& j) {
  check_keys(j, "mitigation", {"scheme", "t_rh", "tracker", "tracker_capacity", "quarantine_fraction"});
  MitigationConfig m;
  m.scheme = parse_mitigation_scheme(get_or<std::string>(j, "scheme", "none"));
  m.t_rh = get_or<std::uint64_t>(j, "t_rh", m.t_rh);
  if (j.contains("tracker") && !j.at("tracker").is_null()) m.tracker = parse_tracker_kind(j.at("tracker").get<std::string>());
  m.tracker_capacity = get_or<std::size_t>(j, "tracker_capacity", 0);
  m.quarantine_fraction = get_or<double>(j, "quarantine_fraction", m.quarantine_fraction);
  return m;
}

inline WorkloadConfig parse_workload(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "workload",
             {"kind", "kernel", "footprint_bytes", "access_count", "stride_lines", "pattern", "channel", "bank", "row",
              "sides", "intensity", "near_interval", "epochs", "path"});
  WorkloadConfig w;
  const auto kind = get_or<std::string>(j, "kind", "kernel");
  if (kind == "kernel") {
    w.kind = WorkloadKind::kernel;
    w.kernel.kind = parse_kernel_kind(get_or<std::string>(j, "kernel", "stream"));
    w.kernel.footprint_bytes = get_or<std::uint64_t>(j, "footprint_bytes", w.kernel.footprint_bytes);
    w.kernel.access_count = get_or<std::uint64_t>(j, "access_count", w.kernel.access_count);
    w.kernel.stride_lines = get_or<std::uint64_t>(j, "stride_lines", w.kernel.stride_lines);
  } else if (kind == "attack") {
    w.kind = WorkloadKind::attack;
    w.attack.kind = parse_attack_kind(get_or<std::string>(j, "pattern", "single"));
    w.attack.channel = get_or<std::uint64_t>(j, "channel", w.attack.channel);
    w.attack.bank = get_or<std::uint64_t>(j, "bank", w.attack.bank);
    w.attack.row = get_or<std::uint64_t>(j, "row", w.attack.row);
    w.attack.sides = get_or<std::uint64_t>(j, "sides", w.attack.sides);
    w.attack.intensity = get_or<std::uint64_t>(j, "intensity", w.attack.intensity);
    w.attack.near_interval = get_or<std::uint64_t>(j, "near_interval", w.attack.near_interval);
    w.attack.epochs = get_or<std::uint64_t>(j, "epochs", w.attack.epochs);
  } else if (kind == "trace") {
    w.kind = WorkloadKind::trace;
    const auto p = std::filesystem::path(get_or<std::string>(j, "path", ""));
    if (p.empty()) throw ConfigError("trace workload needs a path");
    w.trace_path = (p.is_absolute() ? p : base_dir / p).string();
  } else {
    throw ConfigError("unknown workload kind '" + kind + "'");
  }
  return w;
}

}  // namespace detail

/// Parse a config document. Relative trace paths resolve against `base_dir`.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using detail::get_or;
  detail::check_keys(j, "config",
                     {"schema_version", "seed", "geometry", "timing", "page_policy", "queue_depth", "max_epochs",
                      "mapping", "mitigation", "workload", "analytics"});
  const int version = get_or<int>(j, "schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) throw ConfigError("unsupported config schema_version " + std::to_string(version));
  RunConfig rc;
  SimConfig& s = rc.sim;
  s.seed = get_or<std::uint64_t>(j, "seed", kDefaultSeed);
  if (j.contains("geometry")) s.geometry = detail::parse_geometry(j.at("geometry"));
  if (j.contains("timing")) s.timing = detail::parse_timing(j.at("timing"));
  const auto policy = get_or<std::string>(j, "page_policy", "open_adaptive");
  if (policy == "open_adaptive") s.policy = PagePolicy::open_adaptive;
  else if (policy == "open_uncapped") s.policy = PagePolicy::open_uncapped;
  else throw ConfigError("unknown page policy '" + policy + "'");
  s.queue_depth = get_or<std::size_t>(j, "queue_depth", 1);
  if (j.contains("max_epochs") && !j.at("max_epochs").is_null()) s.max_epochs = j.at("max_epochs").get<std::uint64_t>();
  if (j.contains("mapping")) s.mapping = detail::parse_mapping(j.at("mapping"));
  if (j.contains("mitigation")) s.mitigation = detail::parse_mitigation(j.at("mitigation"));
  if (j.contains("workload")) rc.workload = detail::parse_workload(j.at("workload"), base_dir);
  if (j.contains("analytics")) {
    const auto& a = j.at("analytics");
    detail::check_keys(a, "analytics", {"hot_row_thresholds", "line_attribution"});
    s.hot_row_thresholds = get_or<std::vector<std::uint64_t>>(a, "hot_row_thresholds", s.hot_row_thresholds);
    s.line_attribution = get_or<bool>(a, "line_attribution", s.line_attribution);
  }
  rc.workload.kernel.seed = derive_seed(s.seed, kSeedTagWorkload);
  rc.validate();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j, std::filesystem::path(path).parent_path());
}

/// Re-derive seed-dependent fields after overriding the run seed.
inline void set_seed(RunConfig& rc, std::uint64_t seed) {
  rc.sim.seed = seed;
  rc.workload.kernel.seed = derive_seed(seed, kSeedTagWorkload);
}

inline std::unique_ptr<AccessSource> make_source(const RunConfig& rc, const AddressMap& map) {
  switch (rc.workload.kind) {
    case WorkloadKind::kernel: return std::make_unique<KernelSource>(rc.workload.kernel);
    case WorkloadKind::attack:
      return std::make_unique<AttackSource>(rc.workload.attack, map, rc.sim.mitigation.t_rh,
                                            rc.sim.timing.refresh_interval, rc.sim.timing.t_rc);
    case WorkloadKind::trace: {
      auto recs = parse_trace(rc.workload.trace_path);
      for (const auto& r : recs)
        if (r.line >= rc.sim.geometry.total_lines())
          throw AddressRangeError("trace line 0x" + [&] {
            std::ostringstream os;
            os << std::hex << std::uppercase << r.line;
            return os.str();
          }() + " outside the configured geometry");
      return std::make_unique<VectorSource>(std::move(recs));
    }
  }
  throw ConfigError("unknown workload kind");
}

/// Run one scenario end to end.
inline SimReport run_scenario(const RunConfig& rc) {
  rc.validate();
  Simulator sim(rc.sim);
  auto src = make_source(rc, sim.address_map());
  return sim.run(*src, rc.workload_label());
}

}  // namespace rubix
