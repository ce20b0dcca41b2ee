#include "factcheck/hash256.hpp"

#include <stdexcept>

namespace factcheck {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::array<std::uint8_t, Hash256::kBytes> Hash256::to_bytes() const {
  std::array<std::uint8_t, kBytes> out{};
  for (int i = 0; i < kBytes; ++i) out[i] = byte(i);
  return out;
}

Hash256 Hash256::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kBytes) {
    throw std::invalid_argument("Hash256 needs exactly 32 bytes");
  }
  std::array<std::uint64_t, 4> words{};
  for (int i = 0; i < kBytes; ++i) {
    words[i >> 3] = (words[i >> 3] << 8) | bytes[i];
  }
  return Hash256(words);
}

std::string Hash256::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(64, '0');
  for (int i = 0; i < kBytes; ++i) {
    const auto b = byte(i);
    out[2 * i] = kDigits[b >> 4];
    out[2 * i + 1] = kDigits[b & 0xF];
  }
  return out;
}

bool Hash256::is_hex(std::string_view text) noexcept {
  if (text.size() != 64) return false;
  for (char c : text) {
    if (hex_value(c) < 0) return false;
  }
  return true;
}

Hash256 Hash256::from_hex(std::string_view hex) {
  if (!is_hex(hex)) {
    throw std::invalid_argument("malformed hash hex: expected 64 hex digits, got \"" +
                                std::string(hex) + "\"");
  }
  std::array<std::uint64_t, 4> words{};
  for (int i = 0; i < 64; ++i) {
    words[i >> 4] = (words[i >> 4] << 4) | static_cast<std::uint64_t>(hex_value(hex[i]));
  }
  return Hash256(words);
}

}  // namespace factcheck
