#pragma once

// Little-endian helpers for the binary index formats.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace factcheck::detail {

struct Truncated : std::runtime_error {
  Truncated() : std::runtime_error("truncated input") {}
};

class ByteWriter {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  template <typename Range>
  void raw(const Range& bytes) {
    buf_.insert(buf_.end(), std::begin(bytes), std::end(bytes));
  }
  std::vector<std::uint8_t> take() && { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    const auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Truncated();
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace factcheck::detail
