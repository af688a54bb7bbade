#include <gtest/gtest.h>

#include <bit>
#include <vector>

#include "rubix/cipher.hpp"

using namespace rubix;

TEST(Keygen, Deterministic) {
  EXPECT_EQ(keygen(42, 28), keygen(42, 28));
  EXPECT_EQ(keygen(42, 28).width(), 28u);
}

TEST(Keygen, SeedsGiveDifferentKeys) {
  int differing = 0;
  for (std::uint64_t s = 0; s < 100; ++s) differing += encrypt(keygen(2 * s, 28), 0) != encrypt(keygen(2 * s + 1, 28), 0);
  EXPECT_GT(differing, 0);
  EXPECT_GE(differing, 95);
}

TEST(Keygen, WidthBounds) {
  EXPECT_THROW(keygen(1, 3), ConfigError);
  EXPECT_THROW(keygen(1, 33), ConfigError);
  EXPECT_NO_THROW(keygen(1, 4));
  EXPECT_NO_THROW(keygen(1, 32));
}

class CipherPermutation : public ::testing::TestWithParam<unsigned> {};

TEST_P(CipherPermutation, ExhaustiveAtWidth) {
  const unsigned w = GetParam();
  const auto key = keygen(7 + w, w);
  const std::uint64_t n = std::uint64_t{1} << w;
  std::vector<char> seen(n, 0);
  for (std::uint64_t v = 0; v < n; ++v) {
    const auto c = encrypt(key, v);
    ASSERT_LT(c, n);
    ASSERT_FALSE(seen[c]) << "collision at " << v;
    seen[c] = 1;
    ASSERT_EQ(decrypt(key, c), v);
  }
}

INSTANTIATE_TEST_SUITE_P(Widths, CipherPermutation, ::testing::Range(4u, 17u));

TEST(Cipher, Width8MultisetIsFullRange) {
  const auto key = keygen(99, 8);
  std::vector<int> count(256, 0);
  for (std::uint64_t v = 0; v < 256; ++v) ++count[encrypt(key, v)];
  for (int c : count) EXPECT_EQ(c, 1);
}

TEST(Cipher, RoundTripMillionRandom28Bit) {
  const auto key = keygen(5, 28);
  Rng rng(11);
  for (int i = 0; i < 1'000'000; ++i) {
    const std::uint64_t v = rng() & low_mask(28);
    ASSERT_EQ(decrypt(key, encrypt(key, v)), v);
  }
}

TEST(Cipher, Endpoints) {
  for (unsigned w : {4u, 12u, 26u, 32u}) {
    const auto key = keygen(w, w);
    EXPECT_EQ(decrypt(key, encrypt(key, 0)), 0u);
    EXPECT_EQ(decrypt(key, encrypt(key, low_mask(w))), low_mask(w));
  }
}

TEST(Cipher, Avalanche) {
  for (unsigned w : {8u, 16u, 28u}) {
    const auto key = keygen(3, w);
    Rng rng(w);
    double flipped = 0;
    const int samples = 10'000;
    for (int i = 0; i < samples; ++i) {
      const std::uint64_t v = rng() & low_mask(w);
      const unsigned bit = static_cast<unsigned>(uniform_below(rng, w));
      flipped += std::popcount(encrypt(key, v) ^ encrypt(key, v ^ (std::uint64_t{1} << bit)));
    }
    EXPECT_GE(flipped / samples, w / 4.0) << "width " << w;
  }
}

TEST(Cipher, DomainErrors) {
  const auto key = keygen(1, 10);
  EXPECT_THROW(encrypt(key, 1024), DomainError);
  EXPECT_THROW(decrypt(key, 5000), DomainError);
  EXPECT_THROW(encrypt(CipherKey{}, 0), DomainError);
}

TEST(Cipher, KeyMaterialRoundTrip) {
  const auto a = keygen(17, 20);
  const auto b = make_key(a.material(), 20);
  EXPECT_EQ(a, b);
  EXPECT_NE(make_key(a.material(), 21).round_key(0), a.round_key(0));
  EXPECT_EQ(kCipherLatencyCycles, 3u);
}
