#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "factcheck/match_index.hpp"
#include "synthetic.hpp"

using factcheck::index::BloomFilter;
using factcheck::index::ConfigError;
using factcheck::index::FormatError;

namespace {

std::pair<std::uint64_t, int> sizing_oracle(double n, double p) {
  const double ln2 = std::log(2.0);
  const auto m = static_cast<std::uint64_t>(std::ceil(-n * std::log(p) / (ln2 * ln2)));
  const int k = std::clamp(static_cast<int>(std::lround(m / n * ln2)), 1, 16);
  return {m, k};
}

}  // namespace

TEST(Bloom, SizingFollowsOptimalFormulas) {
  for (auto [n, p] : {std::pair{1000.0, 0.01}, {100000.0, 1e-4}, {1.0, 0.5}, {50.0, 1e-9}}) {
    const auto f = BloomFilter::create(static_cast<std::uint64_t>(n), p);
    const auto [m, k] = sizing_oracle(n, p);
    EXPECT_EQ(f.bit_count(), m);
    EXPECT_EQ(f.hash_count(), k);
  }
  const auto small = BloomFilter::create(1, 0.5);
  EXPECT_EQ(small.bit_count(), 2u);
  EXPECT_EQ(small.hash_count(), 1);
  EXPECT_EQ(small.serialize().size(), 4u + 5 * 8 + 1);
}

TEST(Bloom, RejectsBadConfiguration) {
  EXPECT_THROW(BloomFilter::create(0, 0.01), ConfigError);
  EXPECT_THROW(BloomFilter::create(10, 0.0), ConfigError);
  EXPECT_THROW(BloomFilter::create(10, 1.0), ConfigError);
  EXPECT_THROW(BloomFilter(0, 3), ConfigError);
  EXPECT_THROW(BloomFilter(64, 0), ConfigError);
  EXPECT_THROW(BloomFilter(64, 17), ConfigError);
}

TEST(Bloom, EmptyFilterContainsNothing) {
  const auto f = BloomFilter::create(100, 0.01);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(f.contains(factcheck::testing::random_hash(rng)));
}

TEST(Bloom, NoFalseNegatives) {
  auto f = BloomFilter::create(5000, 1e-3);
  std::mt19937_64 rng(2);
  std::vector<factcheck::Hash256> keys;
  for (int i = 0; i < 5000; ++i) keys.push_back(factcheck::testing::random_hash(rng));
  for (const auto& k : keys) f.insert(k);
  EXPECT_EQ(f.inserted(), 5000u);
  for (const auto& k : keys) ASSERT_TRUE(f.contains(k));
}

TEST(Bloom, EmpiricalFalsePositiveRateNearTarget) {
  const double target = 0.01;
  auto f = BloomFilter::create(10000, target);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) f.insert(factcheck::testing::random_hash(rng));
  int hits = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) hits += f.contains(factcheck::testing::random_hash(rng));
  const double fpr = static_cast<double>(hits) / trials;
  EXPECT_LT(fpr, 2 * target);
  EXPECT_GT(fpr, target / 2);
  EXPECT_NEAR(f.expected_fpr(), target, target * 0.1);
}

TEST(Bloom, SerializationRoundTrip) {
  auto f = BloomFilter::create(300, 0.02);
  std::mt19937_64 rng(4);
  std::vector<factcheck::Hash256> keys;
  for (int i = 0; i < 300; ++i) {
    keys.push_back(factcheck::testing::random_hash(rng));
    f.insert(keys.back());
  }
  const auto bytes = f.serialize();
  ASSERT_EQ(bytes.size(), 4 + 5 * 8 + (f.bit_count() + 7) / 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BLM1");
  const auto g = BloomFilter::deserialize(bytes);
  EXPECT_EQ(g, f);
  for (const auto& k : keys) EXPECT_TRUE(g.contains(k));
}

TEST(Bloom, DeserializeRejectsCorruptInput) {
  const auto bytes = BloomFilter::create(10, 0.1).serialize();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(BloomFilter::deserialize(bad_magic), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(BloomFilter::deserialize(truncated), FormatError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(BloomFilter::deserialize(extra), FormatError);
}

TEST(Bloom, PublishedSizingExample) {
  const auto f = BloomFilter::create(1000, 0.01);
  EXPECT_EQ(f.bit_count(), 9586u);
  EXPECT_EQ(f.hash_count(), 7);
}
