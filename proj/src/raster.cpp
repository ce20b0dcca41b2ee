#include "factcheck/raster.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

namespace factcheck {

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, int channels,
                         std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1 || width > kMaxDimension || height > kMaxDimension) {
    throw MalformedImage("image dimensions out of range: " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw MalformedImage("unsupported channel count " + std::to_string(channels));
  }
  const auto expected = static_cast<std::size_t>(width) * height * channels;
  if (pixels_.size() != expected) {
    throw MalformedImage("pixel data length " + std::to_string(pixels_.size()) +
                         " does not match " + std::to_string(expected));
  }
}

RasterImage RasterImage::filled(std::uint32_t width, std::uint32_t height, int channels,
                                std::uint8_t value) {
  return RasterImage(width, height, channels,
                     std::vector<std::uint8_t>(
                         static_cast<std::size_t>(width) * height * channels, value));
}

namespace {

std::uint64_t read_le64(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[off + i];
  return v;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int nbytes) {
  for (int i = 0; i < nbytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Header tokens of a binary PNM, skipping whitespace and '#' comments.
class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> b) : bytes_(b), pos_(2) {}

  std::uint64_t next_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw MalformedImage("PNM header: expected a number");
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (std::uint64_t{1} << 32)) throw MalformedImage("PNM header: number too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw MalformedImage("PNM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

RasterImage decode_pnm(std::span<const std::uint8_t> bytes, int channels) {
  PnmHeaderReader header(bytes);
  const auto width = header.next_number();
  const auto height = header.next_number();
  const auto maxval = header.next_number();
  if (maxval != 255) {
    throw MalformedImage("only 8-bit PNM (maxval 255) is supported, got " +
                         std::to_string(maxval));
  }
  if (width < 1 || height < 1 || width > RasterImage::kMaxDimension ||
      height > RasterImage::kMaxDimension) {
    throw MalformedImage("PNM dimensions out of range");
  }
  const auto offset = header.raster_offset();
  const auto needed = width * height * channels;
  if (bytes.size() - offset < needed) {
    throw MalformedImage("PNM raster truncated");
  }
  std::vector<std::uint8_t> px(bytes.begin() + offset, bytes.begin() + offset + needed);
  return RasterImage(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height),
                     channels, std::move(px));
}

RasterImage decode_raw_luma(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw MalformedImage("raw luma: header truncated");
  const auto width = read_le64(bytes, 0);
  const auto height = read_le64(bytes, 8);
  if (width < 1 || height < 1 || width > RasterImage::kMaxDimension ||
      height > RasterImage::kMaxDimension) {
    throw MalformedImage("raw luma: dimensions out of range");
  }
  if (bytes.size() - 16 != width * height) {
    throw MalformedImage("raw luma: payload length does not match dimensions");
  }
  return RasterImage(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), 1,
                     std::vector<std::uint8_t>(bytes.begin() + 16, bytes.end()));
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, bytes[1] == '5' ? 1 : 3);
  }
  return decode_raw_luma(bytes);
}

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const MalformedImage& e) {
    throw MalformedImage(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& img) {
  const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

std::vector<std::uint8_t> encode_raw_luma(const RasterImage& img) {
  if (img.channels() != 1) throw MalformedImage("raw luma encoding needs a grey image");
  std::vector<std::uint8_t> out;
  out.reserve(16 + img.pixels().size());
  put_le(out, img.width(), 8);
  put_le(out, img.height(), 8);
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

void write_image(const std::filesystem::path& path, const RasterImage& img) {
  const auto bytes = encode_pnm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> pack_image(const RasterImage& img) {
  std::vector<std::uint8_t> out;
  out.reserve(9 + img.pixels().size());
  out.push_back(static_cast<std::uint8_t>(img.channels()));
  put_le(out, img.width(), 4);
  put_le(out, img.height(), 4);
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

RasterImage unpack_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 9) throw MalformedImage("packed image truncated");
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  for (int i = 3; i >= 0; --i) {
    width = (width << 8) | bytes[1 + i];
    height = (height << 8) | bytes[5 + i];
  }
  return RasterImage(width, height, bytes[0],
                     std::vector<std::uint8_t>(bytes.begin() + 9, bytes.end()));
}

}  // namespace factcheck
