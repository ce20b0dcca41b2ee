#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "factcheck/hash256.hpp"

namespace factcheck::index {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BuildError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedRadius : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact-membership Bloom filter over 256-bit fingerprints. Index i of k is
/// (h1 + i * h2) mod m where h1, h2 are two seeded 64-bit hashes of the
/// 32-byte fingerprint.
class BloomFilter {
 public:
  static constexpr int kMaxHashes = 16;
  static constexpr std::uint64_t kDefaultSeed1 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kDefaultSeed2 = 0xC2B2AE3D27D4EB4FULL;

  /// m = ceil(-n ln p / ln^2 2), k = clamp(round(m / n * ln 2), 1, 16).
  static BloomFilter create(std::uint64_t expected_n, double target_fpr);

  BloomFilter(std::uint64_t m_bits, int k_hashes,
              std::array<std::uint64_t, 2> seeds = {kDefaultSeed1, kDefaultSeed2});

  void insert(const Hash256& h);
  [[nodiscard]] bool contains(const Hash256& h) const;

  [[nodiscard]] std::uint64_t bit_count() const { return m_; }
  [[nodiscard]] int hash_count() const { return k_; }
  [[nodiscard]] std::uint64_t inserted() const { return n_; }
  [[nodiscard]] const std::array<std::uint64_t, 2>& seeds() const { return seeds_; }

  /// (1 - e^(-k n / m))^k at the current fill.
  [[nodiscard]] double expected_fpr() const;

  /// "BLM1", m, k, n, seed1, seed2 (u64 LE each), then ceil(m/8) bytes
  /// with bit i at byte i/8, mask 1 << (i%8).
  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static BloomFilter deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const BloomFilter&, const BloomFilter&) = default;

 private:
  [[nodiscard]] std::array<std::uint64_t, 2> base_hashes(const Hash256& h) const;

  std::uint64_t m_;
  int k_;
  std::uint64_t n_ = 0;
  std::array<std::uint64_t, 2> seeds_;
  std::vector<std::uint8_t> bits_;
};

struct MatchResult {
  std::uint64_t id = 0;
  int distance = 0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
  friend auto operator<=>(const MatchResult& a, const MatchResult& b) {
    if (auto c = a.distance <=> b.distance; c != 0) return c;
    return a.id <=> b.id;
  }
};

struct IndexEntry {
  std::uint64_t id = 0;
  Hash256 hash;
};

/// Multi-index hashing over 32 byte-wide chunks. Any hash within distance
/// r <= 31 of a query agrees with it exactly on at least one chunk, so probing
/// the 32 exact-chunk buckets finds every match. Immutable once built.
class MihIndex {
 public:
  static constexpr int kChunks = 32;
  static constexpr int kMaxRadius = kChunks - 1;

  MihIndex() : MihIndex(std::vector<IndexEntry>{}) {}
  /// Throws BuildError on a duplicate id.
  explicit MihIndex(std::vector<IndexEntry> entries);

  /// Entries within `radius`, ascending by (distance, id).
  [[nodiscard]] std::vector<MatchResult> query(const Hash256& q, int radius) const;
  /// Same contract, by exhaustive scan.
  [[nodiscard]] std::vector<MatchResult> linear_query(const Hash256& q, int radius) const;

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const std::vector<IndexEntry>& entries() const { return entries_; }
  /// Entry positions whose hash has `value` at chunk `chunk`.
  [[nodiscard]] std::span<const std::uint32_t> bucket(int chunk, std::uint8_t value) const;

  /// "MIH1", entry count (u64 LE), then per entry u64 LE id and 32 hash bytes.
  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static MihIndex deserialize(std::span<const std::uint8_t> bytes);

 private:
  std::vector<IndexEntry> entries_;
  // CSR layout per chunk: offsets_[c][v] .. offsets_[c][v + 1] into postings_[c].
  std::vector<std::array<std::uint32_t, 257>> offsets_;
  std::vector<std::vector<std::uint32_t>> postings_;
};

}  // namespace factcheck::index
