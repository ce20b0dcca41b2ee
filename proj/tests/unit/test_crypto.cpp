#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "factcheck/crypto.hpp"

namespace crypto = factcheck::crypto;

namespace {

// HMAC built directly from its definition over the library SHA-256.
crypto::Digest manual_hmac(const crypto::Bytes& key, const crypto::Bytes& msg) {
  crypto::Bytes k = key;
  if (k.size() > 64) {
    const auto d = crypto::sha256(k);
    k.assign(d.begin(), d.end());
  }
  k.resize(64, 0);
  crypto::Bytes inner(64);
  crypto::Bytes outer(64);
  for (int i = 0; i < 64; ++i) {
    inner[i] = k[i] ^ 0x36;
    outer[i] = k[i] ^ 0x5c;
  }
  inner.insert(inner.end(), msg.begin(), msg.end());
  const auto ih = crypto::sha256(inner);
  outer.insert(outer.end(), ih.begin(), ih.end());
  return crypto::sha256(outer);
}

crypto::Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  crypto::Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

crypto::SymmetricKey random_key(std::mt19937_64& rng) {
  crypto::SymmetricKey k{};
  for (auto& x : k) x = static_cast<std::uint8_t>(rng());
  return k;
}

bool shares_window(const crypto::Bytes& haystack, const crypto::Bytes& needle_source,
                   std::size_t window) {
  if (needle_source.size() < window) return false;
  for (std::size_t i = 0; i + window <= needle_source.size(); ++i) {
    const auto it = std::search(haystack.begin(), haystack.end(), needle_source.begin() + i,
                                needle_source.begin() + i + window);
    if (it != haystack.end()) return true;
  }
  return false;
}

}  // namespace

TEST(Crypto, Sha256OfAbc) {
  EXPECT_EQ(crypto::to_hex(crypto::sha256(crypto::as_bytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Crypto, HmacMatchesDefinition) {
  std::mt19937_64 rng(1);
  for (std::size_t key_len : {1u, 16u, 32u, 64u, 65u, 200u}) {
    const auto key = random_bytes(rng, key_len);
    const auto msg = random_bytes(rng, 100 + key_len);
    EXPECT_EQ(crypto::hmac_sha256(key, msg), manual_hmac(key, msg)) << key_len;
  }
}

TEST(Crypto, HexRoundTrip) {
  const crypto::Bytes b = {0x00, 0x7f, 0x80, 0xff};
  EXPECT_EQ(crypto::to_hex(b), "007f80ff");
  EXPECT_EQ(crypto::from_hex("007F80ff"), b);
  EXPECT_THROW(crypto::from_hex("abc"), std::invalid_argument);
  EXPECT_THROW(crypto::from_hex("zz"), std::invalid_argument);
}

TEST(Crypto, EqualDigests) {
  crypto::Digest a{};
  crypto::Digest b{};
  EXPECT_TRUE(crypto::equal_digests(a, b));
  b[31] = 1;
  EXPECT_FALSE(crypto::equal_digests(a, b));
  EXPECT_FALSE(crypto::equal_digests(a, std::span<const std::uint8_t>(b.data(), 31)));
}

TEST(ChaChaPoly, RoundTrip) {
  const crypto::ChaChaPolySuite suite;
  std::mt19937_64 rng(2);
  for (std::size_t n : {0u, 1u, 16u, 1000u}) {
    const auto key = random_key(rng);
    const auto pt = random_bytes(rng, n);
    const auto sealed = suite.encrypt(key, 7, pt);
    EXPECT_EQ(sealed.ciphertext.size(), n);
    const auto back = suite.decrypt(key, 7, sealed.ciphertext, sealed.tag);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, pt);
  }
}

TEST(ChaChaPoly, WrongKeyOrSequenceFails) {
  const crypto::ChaChaPolySuite suite;
  std::mt19937_64 rng(3);
  const auto key = random_key(rng);
  const auto pt = random_bytes(rng, 64);
  const auto sealed = suite.encrypt(key, 1, pt);
  EXPECT_FALSE(suite.decrypt(key, 2, sealed.ciphertext, sealed.tag));
  EXPECT_FALSE(suite.decrypt(random_key(rng), 1, sealed.ciphertext, sealed.tag));
}

TEST(ChaChaPoly, EveryFlippedByteIsRejected) {
  const crypto::ChaChaPolySuite suite;
  std::mt19937_64 rng(4);
  const auto key = random_key(rng);
  const auto pt = random_bytes(rng, 200);
  const auto sealed = suite.encrypt(key, 0, pt);
  for (std::size_t i = 0; i < sealed.ciphertext.size(); ++i) {
    auto ct = sealed.ciphertext;
    ct[i] ^= 0x01;
    ASSERT_FALSE(suite.decrypt(key, 0, ct, sealed.tag)) << "byte " << i;
  }
  for (std::size_t i = 0; i < sealed.tag.size(); ++i) {
    auto tag = sealed.tag;
    tag[i] ^= 0x80;
    ASSERT_FALSE(suite.decrypt(key, 0, sealed.ciphertext, tag)) << "tag byte " << i;
  }
}

TEST(ChaChaPoly, CiphertextSharesNoSixteenByteWindowWithPlaintext) {
  const crypto::ChaChaPolySuite suite;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto key = random_key(rng);
    // Low-entropy plaintext makes accidental overlap most likely.
    crypto::Bytes pt(512, static_cast<std::uint8_t>(trial));
    const auto sealed = suite.encrypt(key, trial, pt);
    EXPECT_FALSE(shares_window(sealed.ciphertext, pt, 16));
  }
}
