#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace factcheck::crypto {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;
using SymmetricKey = std::array<std::uint8_t, 32>;
using Tag = std::array<std::uint8_t, 16>;

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::span<const std::uint8_t> as_bytes(std::string_view s);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Lowercase or uppercase hex, even length; throws std::invalid_argument.
Bytes from_hex(std::string_view hex);

Digest sha256(std::span<const std::uint8_t> data);
Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

/// Constant-time comparison of equal-length buffers.
bool equal_digests(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct Sealed {
  Bytes ciphertext;
  Tag tag{};
};

/// Authenticated symmetric encryption keyed per message by a sequence number.
/// Contract: decrypt(k, s, encrypt(k, s, p)) == p; any change to the
/// ciphertext or tag makes decrypt return nullopt.
class CipherSuite {
 public:
  virtual ~CipherSuite() = default;
  [[nodiscard]] virtual Sealed encrypt(const SymmetricKey& key, std::uint64_t sequence,
                                       std::span<const std::uint8_t> plaintext) const = 0;
  [[nodiscard]] virtual std::optional<Bytes> decrypt(const SymmetricKey& key,
                                                     std::uint64_t sequence,
                                                     std::span<const std::uint8_t> ciphertext,
                                                     const Tag& tag) const = 0;
};

/// ChaCha20-Poly1305 (RFC 8439); the 96-bit nonce is 4 zero bytes followed by
/// the little-endian sequence number. A key must never be reused with the
/// same sequence.
class ChaChaPolySuite final : public CipherSuite {
 public:
  [[nodiscard]] Sealed encrypt(const SymmetricKey& key, std::uint64_t sequence,
                               std::span<const std::uint8_t> plaintext) const override;
  [[nodiscard]] std::optional<Bytes> decrypt(const SymmetricKey& key, std::uint64_t sequence,
                                             std::span<const std::uint8_t> ciphertext,
                                             const Tag& tag) const override;
};

}  // namespace factcheck::crypto
