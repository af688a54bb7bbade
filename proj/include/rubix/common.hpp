#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rubix {

// Simulated time in tenths of a nanosecond, so 14.2 ns timings stay exact.
using Tick = std::int64_t;

constexpr Tick kTicksPerNs = 10;

constexpr Tick ns_to_ticks(double ns) { return static_cast<Tick>(ns * kTicksPerNs + (ns >= 0 ? 0.5 : -0.5)); }
constexpr double ticks_to_ns(Tick t) { return static_cast<double>(t) / kTicksPerNs; }

// Error classes. The CLI maps each family to its own exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct AddressRangeError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct StateError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

constexpr bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

constexpr unsigned log2_exact(std::uint64_t v) { return static_cast<unsigned>(std::countr_zero(v)); }

constexpr std::uint64_t low_mask(unsigned bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

// Run-wide PRNG. mt19937_64 output is fully specified by the standard, and the
// helpers below avoid the implementation-defined std distributions so that a
// seed reproduces bit-identical runs on any toolchain.
using Rng = std::mt19937_64;

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform_unit(rng) < p;
}

// splitmix64 finalizer; used for seeding and as the cipher round mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from the run seed and a purpose tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed + 0x9e3779b97f4a7c15ULL * (tag + 1));
}

}  // namespace rubix
