#include <algorithm>
#include <string>
#include <unordered_set>

#include "byte_io.hpp"
#include "factcheck/match_index.hpp"

namespace factcheck::index {

namespace {

constexpr std::array<std::uint8_t, 4> kMihMagic = {'M', 'I', 'H', '1'};

void check_radius(int radius) {
  if (radius < 0 || radius > MihIndex::kMaxRadius) {
    throw UnsupportedRadius("radius " + std::to_string(radius) +
                            " outside the supported range 0..31");
  }
}

}  // namespace

MihIndex::MihIndex(std::vector<IndexEntry> entries)
    : entries_(std::move(entries)), offsets_(kChunks), postings_(kChunks) {
  std::unordered_set<std::uint64_t> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (!ids.insert(e.id).second) {
      throw BuildError("duplicate entry id " + std::to_string(e.id));
    }
  }
  if (entries_.size() > UINT32_MAX) throw BuildError("too many entries");

  for (int c = 0; c < kChunks; ++c) {
    auto& off = offsets_[c];
    off.fill(0);
    for (const auto& e : entries_) ++off[e.hash.byte(c) + 1];
    for (int v = 0; v < 256; ++v) off[v + 1] += off[v];

    auto cursor = off;
    auto& post = postings_[c];
    post.resize(entries_.size());
    for (std::uint32_t pos = 0; pos < entries_.size(); ++pos) {
      post[cursor[entries_[pos].hash.byte(c)]++] = pos;
    }
  }
}

std::span<const std::uint32_t> MihIndex::bucket(int chunk, std::uint8_t value) const {
  const auto& off = offsets_.at(chunk);
  return std::span<const std::uint32_t>(postings_[chunk]).subspan(off[value],
                                                                  off[value + 1] - off[value]);
}

std::vector<MatchResult> MihIndex::query(const Hash256& q, int radius) const {
  check_radius(radius);
  std::vector<std::uint64_t> seen((entries_.size() + 63) / 64, 0);
  std::vector<MatchResult> out;
  for (int c = 0; c < kChunks; ++c) {
    for (auto pos : bucket(c, q.byte(c))) {
      auto& word = seen[pos >> 6];
      const std::uint64_t mask = std::uint64_t{1} << (pos & 63);
      if (word & mask) continue;
      word |= mask;
      const auto& e = entries_[pos];
      const int d = hamming(q, e.hash);
      if (d <= radius) out.push_back({e.id, d});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MatchResult> MihIndex::linear_query(const Hash256& q, int radius) const {
  check_radius(radius);
  std::vector<MatchResult> out;
  for (const auto& e : entries_) {
    const int d = hamming(q, e.hash);
    if (d <= radius) out.push_back({e.id, d});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint8_t> MihIndex::serialize() const {
  detail::ByteWriter out;
  out.raw(kMihMagic);
  out.u64(entries_.size());
  for (const auto& e : entries_) {
    out.u64(e.id);
    out.raw(e.hash.to_bytes());
  }
  return std::move(out).take();
}

MihIndex MihIndex::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  try {
    if (!std::ranges::equal(in.raw(4), kMihMagic)) throw FormatError("not an MIH1 index");
    const auto count = in.u64();
    if (count > in.remaining() / 40) throw FormatError("MIH1: entry count exceeds payload");
    std::vector<IndexEntry> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto id = in.u64();
      entries.push_back({id, Hash256::from_bytes(in.raw(Hash256::kBytes))});
    }
    if (!in.at_end()) throw FormatError("MIH1: trailing bytes");
    return MihIndex(std::move(entries));
  } catch (const detail::Truncated&) {
    throw FormatError("MIH1: truncated");
  }
}

}  // namespace factcheck::index
