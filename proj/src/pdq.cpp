#include "factcheck/pdq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace factcheck::pdq {

namespace {

constexpr std::size_t kPlane = 64;
constexpr int kBoxPasses = 2;

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

// Running-sum box filter over a strided vector. Output o averages the inputs
// in [o - (window - half), o + half - 1], clipped at the ends.
void box_1d(const double* in, double* out, std::size_t length, std::size_t stride,
            std::size_t window) {
  const std::size_t half = (window + 2) / 2;
  const std::size_t warmup = half - 1;
  const std::size_t growing = window - half + 1;
  const std::size_t steady = length > window ? length - window : 0;
  const std::size_t draining = half - 1;

  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t o = 0;
  double sum = 0.0;
  std::size_t count = 0;

  for (std::size_t i = 0; i < warmup; ++i, right += stride) {
    sum += in[right];
    ++count;
  }
  for (std::size_t i = 0; i < growing; ++i, right += stride, o += stride) {
    sum += in[right];
    ++count;
    out[o] = sum / static_cast<double>(count);
  }
  for (std::size_t i = 0; i < steady; ++i, left += stride, right += stride, o += stride) {
    sum += in[right];
    sum -= in[left];
    out[o] = sum / static_cast<double>(count);
  }
  for (std::size_t i = 0; i < draining; ++i, left += stride, o += stride) {
    sum -= in[left];
    --count;
    out[o] = sum / static_cast<double>(count);
  }
}

const std::array<std::array<double, kPlane>, 16>& dct_matrix() {
  static const auto matrix = [] {
    std::array<std::array<double, kPlane>, 16> m{};
    const double scale = std::sqrt(2.0 / static_cast<double>(kPlane));
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < kPlane; ++j) {
        m[i][j] = scale * std::cos(std::numbers::pi / (2.0 * kPlane) *
                                   static_cast<double>(i + 1) * static_cast<double>(2 * j + 1));
      }
    }
    return m;
  }();
  return matrix;
}

}  // namespace

LumaPlane to_luma(const RasterImage& img) {
  if (img.empty()) throw MalformedImage("cannot take luma of an empty image");
  LumaPlane out(img.width(), img.height());
  const auto px = img.pixels();
  if (img.channels() == 1) {
    std::transform(px.begin(), px.end(), out.samples.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v); });
    return out;
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double y = kLumaR * px[3 * i] + kLumaG * px[3 * i + 1] + kLumaB * px[3 * i + 2];
    out.samples[i] = std::clamp(y, 0.0, 255.0);
  }
  return out;
}

int box_window_size(std::size_t old_dim, std::size_t new_dim) {
  return static_cast<int>((old_dim + 2 * new_dim - 1) / (2 * new_dim));
}

LumaPlane downsample64(const LumaPlane& luma) {
  const std::size_t w = luma.width;
  const std::size_t h = luma.height;
  if (w < 1 || h < 1 || luma.samples.size() != w * h) {
    throw MalformedImage("luma plane dimensions do not match its samples");
  }
  const auto row_window = static_cast<std::size_t>(box_window_size(w, kPlane));
  const auto col_window = static_cast<std::size_t>(box_window_size(h, kPlane));

  std::vector<double> a = luma.samples;
  std::vector<double> b(a.size());
  for (int pass = 0; pass < kBoxPasses; ++pass) {
    for (std::size_t y = 0; y < h; ++y) box_1d(&a[y * w], &b[y * w], w, 1, row_window);
    for (std::size_t x = 0; x < w; ++x) box_1d(&b[x], &a[x], h, w, col_window);
  }

  LumaPlane out(kPlane, kPlane);
  for (std::size_t oy = 0; oy < kPlane; ++oy) {
    const auto iy = static_cast<std::size_t>((static_cast<double>(oy) + 0.5) *
                                             static_cast<double>(h) / kPlane);
    for (std::size_t ox = 0; ox < kPlane; ++ox) {
      const auto ix = static_cast<std::size_t>((static_cast<double>(ox) + 0.5) *
                                               static_cast<double>(w) / kPlane);
      out.at(ox, oy) = a[iy * w + ix];
    }
  }
  return out;
}

Dct16 dct16(const LumaPlane& plane64) {
  if (plane64.width != kPlane || plane64.height != kPlane ||
      plane64.samples.size() != kPlane * kPlane) {
    throw std::invalid_argument("dct16 requires a 64x64 plane");
  }
  const auto& d = dct_matrix();

  // rows: D * A (16x64)
  std::array<std::array<double, kPlane>, 16> partial{};
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t x = 0; x < kPlane; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < kPlane; ++y) sum += d[i][y] * plane64.at(x, y);
      partial[i][x] = sum;
    }
  }
  // (D * A) * D^T
  Dct16 out{};
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      double sum = 0.0;
      for (std::size_t x = 0; x < kPlane; ++x) sum += partial[i][x] * d[j][x];
      out[i][j] = sum;
    }
  }
  return out;
}

int quality_metric(const LumaPlane& plane64) {
  double gradient = 0.0;
  for (std::size_t y = 0; y < plane64.height; ++y) {
    for (std::size_t x = 0; x + 1 < plane64.width; ++x) {
      gradient += std::abs(plane64.at(x + 1, y) - plane64.at(x, y));
    }
  }
  for (std::size_t y = 0; y + 1 < plane64.height; ++y) {
    for (std::size_t x = 0; x < plane64.width; ++x) {
      gradient += std::abs(plane64.at(x, y + 1) - plane64.at(x, y));
    }
  }
  const double scaled = std::floor(100.0 * gradient / (255.0 * kPlane * kPlane));
  return static_cast<int>(std::clamp(scaled, 0.0, 100.0));
}

Hash256 threshold_at_median(const Dct16& coeffs) {
  std::array<double, 256> flat{};
  for (std::size_t i = 0; i < 16; ++i) {
    std::copy(coeffs[i].begin(), coeffs[i].end(), flat.begin() + 16 * i);
  }
  auto sorted = flat;
  std::nth_element(sorted.begin(), sorted.begin() + 127, sorted.end());
  const double median = sorted[127];

  Hash256 bits;
  for (int k = 0; k < 256; ++k) {
    if (flat[k] > median) bits.set_bit(k);
  }
  return bits;
}

PdqHash hash_luma(const LumaPlane& luma) {
  const auto plane = downsample64(luma);
  auto coeffs = dct16(plane);
  // Rounding residue on flat planes must not decide bits.
  for (auto& row : coeffs) {
    for (auto& c : row) {
      if (std::abs(c) < kNumericalZero) c = 0.0;
    }
  }
  return PdqHash{threshold_at_median(coeffs), quality_metric(plane)};
}

PdqHash hash(const RasterImage& img) { return hash_luma(to_luma(img)); }

std::string_view to_string(Dihedral d) {
  switch (d) {
    case Dihedral::kIdentity: return "identity";
    case Dihedral::kRotate90: return "rot90";
    case Dihedral::kRotate180: return "rot180";
    case Dihedral::kRotate270: return "rot270";
    case Dihedral::kFlipHorizontal: return "fliph";
    case Dihedral::kFlipVertical: return "flipv";
    case Dihedral::kTranspose: return "transpose";
    case Dihedral::kAntiTranspose: return "antitranspose";
  }
  return "identity";
}

LumaPlane transform(const LumaPlane& luma, Dihedral d) {
  const std::size_t w = luma.width;
  const std::size_t h = luma.height;
  const bool swaps = d == Dihedral::kRotate90 || d == Dihedral::kRotate270 ||
                     d == Dihedral::kTranspose || d == Dihedral::kAntiTranspose;
  LumaPlane out(swaps ? h : w, swaps ? w : h);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      std::size_t sx = x;
      std::size_t sy = y;
      switch (d) {
        case Dihedral::kIdentity: break;
        case Dihedral::kRotate90: sx = y; sy = h - 1 - x; break;
        case Dihedral::kRotate180: sx = w - 1 - x; sy = h - 1 - y; break;
        case Dihedral::kRotate270: sx = w - 1 - y; sy = x; break;
        case Dihedral::kFlipHorizontal: sx = w - 1 - x; break;
        case Dihedral::kFlipVertical: sy = h - 1 - y; break;
        case Dihedral::kTranspose: sx = y; sy = x; break;
        case Dihedral::kAntiTranspose: sx = w - 1 - y; sy = h - 1 - x; break;
      }
      out.at(x, y) = luma.at(sx, sy);
    }
  }
  return out;
}

DihedralSet dihedral_hashes(const RasterImage& img) {
  const auto luma = to_luma(img);
  DihedralSet out{};
  for (std::size_t i = 0; i < kAllDihedrals.size(); ++i) {
    out[i] = i == 0 ? hash_luma(luma) : hash_luma(transform(luma, kAllDihedrals[i]));
  }
  return out;
}

}  // namespace factcheck::pdq
