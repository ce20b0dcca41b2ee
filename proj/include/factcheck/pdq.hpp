#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "factcheck/hash256.hpp"
#include "factcheck/raster.hpp"

/// PDQ-compatible perceptual hashing: Rec.601 luma, two-pass box (tent)
/// downsampling to 64x64, orthonormal DCT-II restricted to the 16x16 lowest
/// AC frequencies, and a strict greater-than-median threshold.
namespace factcheck::pdq {

/// Real-valued luminance plane, row-major.
struct LumaPlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> samples;

  LumaPlane() = default;
  LumaPlane(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), samples(w * h, fill) {}

  [[nodiscard]] double at(std::size_t x, std::size_t y) const { return samples[y * width + x]; }
  double& at(std::size_t x, std::size_t y) { return samples[y * width + x]; }
};

/// 16x16 block of DCT coefficients; [i][j] holds vertical frequency i + 1 and
/// horizontal frequency j + 1.
using Dct16 = std::array<std::array<double, 16>, 16>;

struct PdqHash {
  Hash256 bits;
  int quality = 0;  // 0..100; 0 marks a featureless input

  friend bool operator==(const PdqHash&, const PdqHash&) = default;
};

/// The eight symmetries of the square, in the order returned by
/// dihedral_hashes.
enum class Dihedral {
  kIdentity = 0,
  kRotate90,        // clockwise
  kRotate180,
  kRotate270,       // clockwise
  kFlipHorizontal,  // mirror left/right
  kFlipVertical,    // mirror top/bottom
  kTranspose,       // mirror about the main diagonal
  kAntiTranspose,   // mirror about the anti-diagonal
};
inline constexpr std::array<Dihedral, 8> kAllDihedrals = {
    Dihedral::kIdentity,       Dihedral::kRotate90,     Dihedral::kRotate180,
    Dihedral::kRotate270,      Dihedral::kFlipHorizontal, Dihedral::kFlipVertical,
    Dihedral::kTranspose,      Dihedral::kAntiTranspose};

using DihedralSet = std::array<PdqHash, 8>;

/// "identity", "rot90", ... "antitranspose".
std::string_view to_string(Dihedral d);

LumaPlane to_luma(const RasterImage& img);

/// Box-filter window used when shrinking `old_dim` samples to `new_dim`.
int box_window_size(std::size_t old_dim, std::size_t new_dim);

/// Two box passes along each axis followed by center-sample decimation.
LumaPlane downsample64(const LumaPlane& luma);

/// Throws std::invalid_argument unless the plane is 64x64.
Dct16 dct16(const LumaPlane& plane64);

/// clamp(floor(100 * (sum|dx| + sum|dy|) / (255 * 64 * 64)), 0, 100)
int quality_metric(const LumaPlane& plane64);

/// Bit 16*i + j is set iff coeffs[i][j] is strictly above the (lower) median.
Hash256 threshold_at_median(const Dct16& coeffs);

/// Coefficients smaller than this in magnitude are treated as exactly zero.
inline constexpr double kNumericalZero = 1e-9;

PdqHash hash_luma(const LumaPlane& luma);
PdqHash hash(const RasterImage& img);

LumaPlane transform(const LumaPlane& luma, Dihedral d);
DihedralSet dihedral_hashes(const RasterImage& img);

}  // namespace factcheck::pdq
