#pragma once

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace factcheck {

/// A 256-bit fingerprint. Bit k lives in word k / 64 at position 63 - k % 64,
/// so the words read in order form the big-endian byte string and the hex
/// text, with bit 0 as the most significant bit of the first hex digit.
class Hash256 {
 public:
  static constexpr int kBits = 256;
  static constexpr int kBytes = 32;

  constexpr Hash256() = default;
  constexpr explicit Hash256(const std::array<std::uint64_t, 4>& words)
      : words_(words) {}

  [[nodiscard]] constexpr bool bit(int k) const {
    return (words_[k >> 6] >> (63 - (k & 63))) & 1U;
  }
  constexpr void set_bit(int k, bool value = true) {
    const std::uint64_t mask = std::uint64_t{1} << (63 - (k & 63));
    if (value) {
      words_[k >> 6] |= mask;
    } else {
      words_[k >> 6] &= ~mask;
    }
  }
  constexpr void flip_bit(int k) {
    words_[k >> 6] ^= std::uint64_t{1} << (63 - (k & 63));
  }

  [[nodiscard]] constexpr int popcount() const {
    int total = 0;
    for (auto w : words_) total += std::popcount(w);
    return total;
  }

  /// Byte `i` of the big-endian serialization; also the MIH chunk value.
  [[nodiscard]] constexpr std::uint8_t byte(int i) const {
    return static_cast<std::uint8_t>(words_[i >> 3] >> (56 - 8 * (i & 7)));
  }

  [[nodiscard]] std::array<std::uint8_t, kBytes> to_bytes() const;
  static Hash256 from_bytes(std::span<const std::uint8_t> bytes);

  /// 64 lowercase hex characters.
  [[nodiscard]] std::string to_hex() const;
  /// Accepts exactly 64 hex digits (either case); throws std::invalid_argument.
  static Hash256 from_hex(std::string_view hex);
  static bool is_hex(std::string_view text) noexcept;

  [[nodiscard]] constexpr const std::array<std::uint64_t, 4>& words() const {
    return words_;
  }

  constexpr Hash256 operator^(const Hash256& other) const {
    Hash256 out;
    for (int i = 0; i < 4; ++i) out.words_[i] = words_[i] ^ other.words_[i];
    return out;
  }
  constexpr Hash256 operator~() const {
    Hash256 out;
    for (int i = 0; i < 4; ++i) out.words_[i] = ~words_[i];
    return out;
  }

  friend constexpr bool operator==(const Hash256&, const Hash256&) = default;
  friend constexpr auto operator<=>(const Hash256&, const Hash256&) = default;

 private:
  std::array<std::uint64_t, 4> words_{};
};

/// Number of differing bit positions, 0..256.
[[nodiscard]] constexpr int hamming(const Hash256& a, const Hash256& b) {
  int total = 0;
  for (int i = 0; i < 4; ++i) total += std::popcount(a.words()[i] ^ b.words()[i]);
  return total;
}

}  // namespace factcheck
