#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "byte_io.hpp"
#include "factcheck/match_index.hpp"

namespace factcheck::index {

namespace {

constexpr std::array<std::uint8_t, 4> kBloomMagic = {'B', 'L', 'M', '1'};

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t seeded_hash(const Hash256& h, std::uint64_t seed) {
  std::uint64_t acc = mix64(seed);
  for (auto w : h.words()) acc = mix64(acc ^ w) + 0x9E3779B97F4A7C15ULL;
  return mix64(acc);
}

}  // namespace

BloomFilter BloomFilter::create(std::uint64_t expected_n, double target_fpr) {
  if (expected_n < 1) throw ConfigError("bloom filter needs expected_n >= 1");
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
    throw ConfigError("bloom filter target_fpr must lie in (0, 1)");
  }
  const double ln2 = std::numbers::ln2;
  const double n = static_cast<double>(expected_n);
  const auto m = static_cast<std::uint64_t>(std::ceil(-n * std::log(target_fpr) / (ln2 * ln2)));
  const double k = std::round(static_cast<double>(m) / n * ln2);
  return BloomFilter(std::max<std::uint64_t>(m, 1),
                     static_cast<int>(std::clamp(k, 1.0, static_cast<double>(kMaxHashes))));
}

BloomFilter::BloomFilter(std::uint64_t m_bits, int k_hashes, std::array<std::uint64_t, 2> seeds)
    : m_(m_bits), k_(k_hashes), seeds_(seeds) {
  if (m_ < 1) throw ConfigError("bloom filter needs at least one bit");
  if (k_ < 1 || k_ > kMaxHashes) throw ConfigError("bloom filter k must be in [1, 16]");
  bits_.assign((m_ + 7) / 8, 0);
}

std::array<std::uint64_t, 2> BloomFilter::base_hashes(const Hash256& h) const {
  return {seeded_hash(h, seeds_[0]) % m_, seeded_hash(h, seeds_[1]) % m_};
}

void BloomFilter::insert(const Hash256& h) {
  const auto [h1, h2] = base_hashes(h);
  std::uint64_t idx = h1;
  for (int i = 0; i < k_; ++i) {
    bits_[idx >> 3] |= static_cast<std::uint8_t>(1U << (idx & 7));
    idx = (idx + h2) % m_;
  }
  ++n_;
}

bool BloomFilter::contains(const Hash256& h) const {
  const auto [h1, h2] = base_hashes(h);
  std::uint64_t idx = h1;
  for (int i = 0; i < k_; ++i) {
    if ((bits_[idx >> 3] & (1U << (idx & 7))) == 0) return false;
    idx = (idx + h2) % m_;
  }
  return true;
}

double BloomFilter::expected_fpr() const {
  const double k = k_;
  return std::pow(1.0 - std::exp(-k * static_cast<double>(n_) / static_cast<double>(m_)), k);
}

std::vector<std::uint8_t> BloomFilter::serialize() const {
  detail::ByteWriter out;
  out.raw(kBloomMagic);
  out.u64(m_);
  out.u64(static_cast<std::uint64_t>(k_));
  out.u64(n_);
  for (auto s : seeds_) out.u64(s);
  out.raw(bits_);
  return std::move(out).take();
}

BloomFilter BloomFilter::deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  try {
    if (!std::ranges::equal(in.raw(4), kBloomMagic)) throw FormatError("not a BLM1 bloom filter");
    const auto m = in.u64();
    const auto k = in.u64();
    const auto n = in.u64();
    std::array<std::uint64_t, 2> seeds{in.u64(), in.u64()};
    if (m < 1 || k < 1 || k > kMaxHashes) throw FormatError("BLM1: invalid parameters");
    if (m / 8 + (m % 8 != 0) != in.remaining()) throw FormatError("BLM1: bit array length mismatch");
    BloomFilter f(m, static_cast<int>(k), seeds);
    f.n_ = n;
    const auto payload = in.raw(f.bits_.size());
    std::copy(payload.begin(), payload.end(), f.bits_.begin());
    return f;
  } catch (const detail::Truncated&) {
    throw FormatError("BLM1: truncated");
  }
}

}  // namespace factcheck::index
