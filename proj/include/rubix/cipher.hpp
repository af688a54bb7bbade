#pragma once

// Programmable-width block cipher for address-space randomization.
//
// An unbalanced Feistel network over a w-bit block split into a high part of
// ceil(w/2) bits and a low part of floor(w/2) bits. Rounds alternately xor a
// keyed mix of one part into the other, so every round is invertible and the
// whole network is a permutation of [0, 2^w) for any width and key.

#include <array>
#include <cstdint>
#include <string>

#include "rubix/common.hpp"

namespace rubix {

inline constexpr unsigned kCipherMinWidth = 4;
inline constexpr unsigned kCipherMaxWidth = 32;
inline constexpr unsigned kCipherRounds = 12;
// Hardware latency of the modeled cipher, recorded for reporting only.
inline constexpr unsigned kCipherLatencyCycles = 3;

class CipherKey {
 public:
  CipherKey() = default;

  unsigned width() const { return width_; }
  /// 96 bits of key material, low word first.
  const std::array<std::uint32_t, 3>& material() const { return material_; }
  std::uint64_t round_key(unsigned r) const { return round_keys_[r]; }

  friend bool operator==(const CipherKey&, const CipherKey&) = default;

 private:
  friend CipherKey make_key(const std::array<std::uint32_t, 3>& material, unsigned width);

  void expand() {
    const std::uint64_t k0 = (std::uint64_t{material_[1]} << 32) | material_[0];
    const std::uint64_t k1 = (std::uint64_t{material_[2]} << 32) | width_;
    for (unsigned r = 0; r < kCipherRounds; ++r) round_keys_[r] = mix64(k0 ^ mix64(k1 + r * 0x9e3779b97f4a7c15ULL));
  }

  unsigned width_ = 0;
  std::array<std::uint32_t, 3> material_{};
  std::array<std::uint64_t, kCipherRounds> round_keys_{};
};

inline void check_cipher_width(unsigned width) {
  if (width < kCipherMinWidth || width > kCipherMaxWidth)
    throw ConfigError("cipher width " + std::to_string(width) + " outside [" + std::to_string(kCipherMinWidth) + ", " +
                      std::to_string(kCipherMaxWidth) + "]");
}

inline CipherKey make_key(const std::array<std::uint32_t, 3>& material, unsigned width) {
  check_cipher_width(width);
  CipherKey key;
  key.width_ = width;
  key.material_ = material;
  key.expand();
  return key;
}

/// Boot-time key: 96 bits drawn from a PRNG seeded with `seed`.
inline CipherKey keygen(std::uint64_t seed, unsigned width) {
  check_cipher_width(width);
  Rng rng(seed);
  std::array<std::uint32_t, 3> m{};
  for (auto& w : m) w = static_cast<std::uint32_t>(rng() >> 32);
  return make_key(m, width);
}

namespace detail {

struct FeistelHalves {
  unsigned hi_bits, lo_bits;
  std::uint64_t hi_mask, lo_mask;
};

constexpr FeistelHalves halves(unsigned width) {
  const unsigned hi = (width + 1) / 2, lo = width / 2;
  return {hi, lo, low_mask(hi), low_mask(lo)};
}

constexpr std::uint64_t round_fn(std::uint64_t x, std::uint64_t round_key) { return mix64(x ^ round_key); }

inline void check_domain(const CipherKey& key, std::uint64_t value) {
  if (key.width() == 0) throw DomainError("cipher key not initialized");
  if (value > low_mask(key.width()))
    throw DomainError("value " + std::to_string(value) + " outside " + std::to_string(key.width()) + "-bit domain");
}

}  // namespace detail

inline std::uint64_t encrypt(const CipherKey& key, std::uint64_t value) {
  detail::check_domain(key, value);
  const auto h = detail::halves(key.width());
  std::uint64_t hi = value >> h.lo_bits, lo = value & h.lo_mask;
  for (unsigned r = 0; r < kCipherRounds; ++r) {
    if (r % 2 == 0)
      lo ^= detail::round_fn(hi, key.round_key(r)) & h.lo_mask;
    else
      hi ^= detail::round_fn(lo, key.round_key(r)) & h.hi_mask;
  }
  return (hi << h.lo_bits) | lo;
}

inline std::uint64_t decrypt(const CipherKey& key, std::uint64_t value) {
  detail::check_domain(key, value);
  const auto h = detail::halves(key.width());
  std::uint64_t hi = value >> h.lo_bits, lo = value & h.lo_mask;
  for (unsigned r = kCipherRounds; r-- > 0;) {
    if (r % 2 == 0)
      lo ^= detail::round_fn(hi, key.round_key(r)) & h.lo_mask;
    else
      hi ^= detail::round_fn(lo, key.round_key(r)) & h.hi_mask;
  }
  return (hi << h.lo_bits) | lo;
}

}  // namespace rubix
