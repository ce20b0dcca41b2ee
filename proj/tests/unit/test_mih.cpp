#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "factcheck/match_index.hpp"
#include "synthetic.hpp"

using factcheck::Hash256;
using factcheck::index::BuildError;
using factcheck::index::FormatError;
using factcheck::index::IndexEntry;
using factcheck::index::MatchResult;
using factcheck::index::MihIndex;
using factcheck::index::UnsupportedRadius;

namespace {

// Exhaustive scan written against the hash type only.
std::vector<MatchResult> scan_oracle(const std::vector<IndexEntry>& entries, const Hash256& q,
                                     int radius) {
  std::vector<MatchResult> out;
  for (const auto& e : entries) {
    int d = 0;
    for (int i = 0; i < 256; ++i) d += e.hash.bit(i) != q.bit(i);
    if (d <= radius) out.push_back({e.id, d});
  }
  std::sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

std::vector<IndexEntry> random_entries(std::mt19937_64& rng, std::size_t n) {
  std::vector<IndexEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    entries.push_back({i * 3 + 1, factcheck::testing::random_hash(rng)});
  }
  return entries;
}

}  // namespace

TEST(Mih, EmptyIndexReturnsNothing) {
  const MihIndex idx;
  std::mt19937_64 rng(1);
  EXPECT_TRUE(idx.query(factcheck::testing::random_hash(rng), 31).empty());
  EXPECT_EQ(idx.size(), 0u);
}

TEST(Mih, MemberFoundAtRadiusZero) {
  std::mt19937_64 rng(2);
  const auto entries = random_entries(rng, 100);
  const MihIndex idx(entries);
  const auto hits = idx.query(entries[40].hash, 0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], (MatchResult{entries[40].id, 0}));
}

TEST(Mih, RadiusOutOfRangeThrows) {
  const MihIndex idx;
  EXPECT_THROW(idx.query(Hash256{}, 32), UnsupportedRadius);
  EXPECT_THROW(idx.query(Hash256{}, -1), UnsupportedRadius);
  EXPECT_NO_THROW(idx.query(Hash256{}, 31));
}

TEST(Mih, DuplicateIdsRejected) {
  EXPECT_THROW(MihIndex({{1, Hash256{}}, {1, ~Hash256{}}}), BuildError);
}

TEST(Mih, EqualsScanOracleOnPlantedNeighbours) {
  std::mt19937_64 rng(3);
  auto entries = random_entries(rng, 2000);
  std::vector<Hash256> queries;
  for (int q = 0; q < 50; ++q) {
    const auto base = factcheck::testing::random_hash(rng);
    queries.push_back(base);
    // Plant neighbours at every distance up to 40, crossing the radius.
    for (int d = 0; d <= 40; d += 4) {
      entries.push_back({100000 + q * 100 + static_cast<std::uint64_t>(d),
                         factcheck::testing::perturb(base, d, rng)});
    }
  }
  const MihIndex idx(entries);
  for (const auto& q : queries) {
    for (int radius : {0, 1, 8, 16, 31}) {
      ASSERT_EQ(idx.query(q, radius), scan_oracle(entries, q, radius)) << radius;
      ASSERT_EQ(idx.linear_query(q, radius), scan_oracle(entries, q, radius));
    }
  }
}

TEST(Mih, ResultsSortedByDistanceThenId) {
  const Hash256 base;
  auto one = base;
  one.flip_bit(3);
  const MihIndex idx({{9, one}, {2, one}, {5, base}});
  const auto hits = idx.query(base, 2);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0], (MatchResult{5, 0}));
  EXPECT_EQ(hits[1], (MatchResult{2, 1}));
  EXPECT_EQ(hits[2], (MatchResult{9, 1}));
}

TEST(Mih, BucketsHoldEveryEntryOncePerChunk) {
  std::mt19937_64 rng(4);
  const auto entries = random_entries(rng, 500);
  const MihIndex idx(entries);
  for (int chunk = 0; chunk < MihIndex::kChunks; ++chunk) {
    std::size_t total = 0;
    for (int v = 0; v < 256; ++v) {
      for (auto pos : idx.bucket(chunk, static_cast<std::uint8_t>(v))) {
        ASSERT_EQ(entries[pos].hash.byte(chunk), v);
      }
      total += idx.bucket(chunk, static_cast<std::uint8_t>(v)).size();
    }
    EXPECT_EQ(total, entries.size());
  }
}

TEST(Mih, SerializationRoundTrip) {
  std::mt19937_64 rng(5);
  const auto entries = random_entries(rng, 200);
  const MihIndex idx(entries);
  const auto bytes = idx.serialize();
  ASSERT_EQ(bytes.size(), 4u + 8u + 200u * 40u);
  const auto back = MihIndex::deserialize(bytes);
  ASSERT_EQ(back.size(), idx.size());
  const auto q = factcheck::testing::perturb(entries[7].hash, 20, rng);
  EXPECT_EQ(back.query(q, 31), idx.query(q, 31));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(MihIndex::deserialize(truncated), FormatError);
  auto bad = bytes;
  bad[1] = 'X';
  EXPECT_THROW(MihIndex::deserialize(bad), FormatError);
}

TEST(Mih, DistanceThirtyTwoIsNotReturned) {
  std::mt19937_64 rng(6);
  const auto h = factcheck::testing::random_hash(rng);
  const MihIndex idx({{1, h}});
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_TRUE(idx.query(factcheck::testing::perturb(h, 32, rng), 31).empty());
    EXPECT_EQ(idx.query(factcheck::testing::perturb(h, 31, rng), 31).size(), 1u);
  }
}
