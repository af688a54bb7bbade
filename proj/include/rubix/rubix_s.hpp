#pragma once

// Static randomized mapping: encrypt the gang address, keep the line-in-gang
// bits, and route the result through a conventional mapping.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rubix/cipher.hpp"
#include "rubix/geometry.hpp"

namespace rubix {

inline void check_gang_size(std::uint64_t gang_size) {
  if (gang_size != 1 && gang_size != 2 && gang_size != 4)
    throw ConfigError("gang size must be 1, 2 or 4 (got " + std::to_string(gang_size) + ")");
}

struct RubixSConfig {
  std::uint64_t gang_size = 4;
  CipherKey key;
  StaticScheme base = StaticScheme::coffee_lake;

  unsigned gang_bits() const { return log2_exact(gang_size); }
};

/// Key width follows the geometry: line_addr_bits - log2(gang_size).
inline RubixSConfig make_rubix_s(const Geometry& geom, std::uint64_t gang_size, std::uint64_t seed,
                                 StaticScheme base = StaticScheme::coffee_lake) {
  check_gang_size(gang_size);
  geom.validate();
  const unsigned width = geom.line_addr_bits() - log2_exact(gang_size);
  return {gang_size, keygen(seed, width), base};
}

inline std::uint64_t encrypt_line(LineAddress line, const RubixSConfig& cfg) {
  const unsigned k = cfg.gang_bits();
  return (encrypt(cfg.key, line.value >> k) << k) | (line.value & low_mask(k));
}

inline PhysicalLocation map_rubix_s(LineAddress line, const RubixSConfig& cfg, const Geometry& geom) {
  check_range(line, geom);
  if (cfg.key.width() + cfg.gang_bits() != geom.line_addr_bits())
    throw ConfigError("cipher width does not match geometry and gang size");
  return map_static(cfg.base, LineAddress{encrypt_line(line, cfg)}, geom);
}

inline LineAddress unmap_rubix_s(const PhysicalLocation& loc, const RubixSConfig& cfg, const Geometry& geom) {
  const std::uint64_t enc = unmap_static(cfg.base, loc, geom).value;
  const unsigned k = cfg.gang_bits();
  return {(decrypt(cfg.key, enc >> k) << k) | (enc & low_mask(k))};
}

/// A static mapping, optionally preceded by gang-address encryption.
class AddressMap {
 public:
  AddressMap(Geometry geom, StaticScheme scheme) : geom_(geom), scheme_(scheme) { geom_.validate(); }
  AddressMap(Geometry geom, RubixSConfig rubix) : geom_(geom), scheme_(rubix.base), rubix_(std::move(rubix)) {
    geom_.validate();
    if (rubix_->key.width() + rubix_->gang_bits() != geom_.line_addr_bits())
      throw ConfigError("cipher width does not match geometry and gang size");
  }

  PhysicalLocation map(LineAddress line) const {
    return rubix_ ? map_rubix_s(line, *rubix_, geom_) : map_static(scheme_, line, geom_);
  }
  LineAddress unmap(const PhysicalLocation& loc) const {
    return rubix_ ? unmap_rubix_s(loc, *rubix_, geom_) : unmap_static(scheme_, loc, geom_);
  }
  PhysicalLocation operator()(LineAddress line) const { return map(line); }

  const Geometry& geometry() const { return geom_; }
  StaticScheme base() const { return scheme_; }
  const std::optional<RubixSConfig>& rubix() const { return rubix_; }

 private:
  Geometry geom_;
  StaticScheme scheme_;
  std::optional<RubixSConfig> rubix_;
};

/// hist[k] = number of rows receiving exactly k lines of the footprint [0, footprint_lines).
template <class MapFn>
std::vector<std::uint64_t> lines_per_row_histogram(std::uint64_t footprint_lines, MapFn&& map, const Geometry& geom) {
  if (footprint_lines > geom.total_lines()) throw ConfigError("footprint larger than the address space");
  if (footprint_lines == 0) return {};
  std::vector<std::uint32_t> per_row(geom.total_rows(), 0);
  std::vector<std::uint64_t> touched;
  for (std::uint64_t v = 0; v < footprint_lines; ++v) {
    const auto r = geom.flat_row(map(LineAddress{v}));
    if (per_row[r]++ == 0) touched.push_back(r);
  }
  std::vector<std::uint64_t> hist(1, 0);
  for (auto r : touched) {
    const auto k = per_row[r];
    if (k >= hist.size()) hist.resize(k + 1, 0);
    ++hist[k];
  }
  return hist;
}

struct ScatterCensus {
  // Index k: rows with exactly k footprint lines. Index 0 is unused (always 0).
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<std::vector<std::uint64_t>> per_seed;

  double bucket_mean(std::size_t k) const { return k < mean.size() ? mean[k] : 0.0; }
  /// Rows with at least k lines, for one seed.
  static std::uint64_t at_least(const std::vector<std::uint64_t>& hist, std::size_t k) {
    std::uint64_t n = 0;
    for (std::size_t i = k; i < hist.size(); ++i) n += hist[i];
    return n;
  }
};

/// Map a contiguous footprint under one Rubix-S key per seed and average the
/// lines-per-row histogram across seeds.
inline ScatterCensus scatter_census(std::uint64_t footprint_lines, std::uint64_t gang_size, StaticScheme base,
                                    const Geometry& geom, std::span<const std::uint64_t> seeds) {
  ScatterCensus out;
  if (footprint_lines == 0 || seeds.empty()) return out;
  std::size_t width = 0;
  for (auto seed : seeds) {
    const AddressMap m(geom, make_rubix_s(geom, gang_size, seed, base));
    out.per_seed.push_back(lines_per_row_histogram(footprint_lines, m, geom));
    width = std::max(width, out.per_seed.back().size());
  }
  out.mean.assign(width, 0.0);
  out.stdev.assign(width, 0.0);
  const double n = static_cast<double>(seeds.size());
  for (std::size_t k = 0; k < width; ++k) {
    double sum = 0, sq = 0;
    for (const auto& h : out.per_seed) {
      const double x = k < h.size() ? static_cast<double>(h[k]) : 0.0;
      sum += x;
      sq += x * x;
    }
    out.mean[k] = sum / n;
    out.stdev[k] = seeds.size() > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))) : 0.0;
  }
  return out;
}

}  // namespace rubix
