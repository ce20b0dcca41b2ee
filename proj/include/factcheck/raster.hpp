#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace factcheck {

class MalformedImage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decoded 8-bit raster, row-major, 1 (grey) or 3 (RGB) interleaved channels.
class RasterImage {
 public:
  static constexpr std::uint32_t kMaxDimension = 1U << 16;

  RasterImage() = default;
  /// Throws MalformedImage when the dimensions, channel count or data length
  /// are inconsistent.
  RasterImage(std::uint32_t width, std::uint32_t height, int channels,
              std::vector<std::uint8_t> pixels);

  static RasterImage filled(std::uint32_t width, std::uint32_t height, int channels,
                            std::uint8_t value);

  [[nodiscard]] std::uint32_t width() const { return width_; }
  [[nodiscard]] std::uint32_t height() const { return height_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] std::span<const std::uint8_t> pixels() const { return pixels_; }
  [[nodiscard]] std::span<std::uint8_t> mutable_pixels() { return pixels_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] std::uint8_t at(std::uint32_t x, std::uint32_t y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(std::uint32_t x, std::uint32_t y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> pixels_;
};

// On-disk rasters: binary PGM (P5) / PPM (P6) with maxval 255, or raw luma
// (u64 LE width, u64 LE height, width*height bytes).
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_pnm(const RasterImage& img);
std::vector<std::uint8_t> encode_raw_luma(const RasterImage& img);
void write_image(const std::filesystem::path& path, const RasterImage& img);

/// Compact in-memory form used as message plaintext:
/// channels (1 byte), width (u32 LE), height (u32 LE), pixels.
std::vector<std::uint8_t> pack_image(const RasterImage& img);
RasterImage unpack_image(std::span<const std::uint8_t> bytes);

}  // namespace factcheck
