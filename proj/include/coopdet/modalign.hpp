#pragma once

#include <array>
#include <cstdint>

#include "coopdet/bev.hpp"
#include "coopdet/geometry.hpp"

namespace coopdet {

// Zero-padding that aligns a pixel extent to multiples of the downsampling
// rate k. Pads are always in [0, k).
struct PaddingSpec {
  int p_l = 0, p_r = 0, p_t = 0, p_b = 0;
  int k = 1;

  bool zero() const { return p_l == 0 && p_r == 0 && p_t == 0 && p_b == 0; }
};

// Half-open global fixel index ranges; fixel g covers pixels [g*k, (g+1)*k).
struct FixelExtent {
  std::int64_t gx0 = 0, gx1 = 0, gy0 = 0, gy1 = 0;
  bool operator==(const FixelExtent&) const = default;
};

// Half-open integer ranges along three axes, for the volumetric variant.
struct Extent3D {
  std::int64_t x0 = 0, x1 = 0, y0 = 0, y1 = 0, z0 = 0, z1 = 0;
};

struct Padding3D {
  int p_l = 0, p_r = 0, p_t = 0, p_b = 0, p_front = 0, p_back = 0;
  int k = 1;
};

// Mathematical (nonnegative) modulus.
inline std::int64_t pos_mod(std::int64_t v, std::int64_t k) {
  const std::int64_t m = v % k;
  return m < 0 ? m + k : m;
}

PaddingSpec mod_padding(const PixelExtent& extent, int k);
PixelExtent padded_extent(const PixelExtent& extent, const PaddingSpec& pad);
BevImage apply_padding(const BevImage& img, const PaddingSpec& pad);

// Fixed-size alternative: content shifted right/down so the extent rebases to
// lattice-aligned bounds; the rightmost p_l columns and bottom p_t rows of
// content are lost. Requires width and height divisible by k.
BevImage mod_shift(const BevImage& img, int k);

Padding3D mod_padding_3d(const Extent3D& extent, int k);

// Exact integer division of lattice-aligned pixel bounds by k.
FixelExtent fixel_origin(const PixelExtent& padded, int k);

}  // namespace coopdet
