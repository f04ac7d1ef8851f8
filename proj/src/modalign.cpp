#include "coopdet/modalign.hpp"

#include <cstring>

#include "coopdet/errors.hpp"

namespace coopdet {

PaddingSpec mod_padding(const PixelExtent& extent, int k) {
  if (k < 1) throw ShapeError("mod_padding: k must be >= 1");
  PaddingSpec p;
  p.k = k;
  p.p_l = static_cast<int>(pos_mod(extent.x0, k));
  p.p_t = static_cast<int>(pos_mod(extent.y0, k));
  p.p_r = static_cast<int>(pos_mod(-extent.x1, k));
  p.p_b = static_cast<int>(pos_mod(-extent.y1, k));
  return p;
}

PixelExtent padded_extent(const PixelExtent& extent, const PaddingSpec& pad) {
  return PixelExtent{extent.x0 - pad.p_l, extent.x1 + pad.p_r,
                     extent.y0 - pad.p_t, extent.y1 + pad.p_b};
}

BevImage apply_padding(const BevImage& img, const PaddingSpec& pad) {
  const PaddingSpec expect = mod_padding(img.extent, pad.k);
  if (expect.p_l != pad.p_l || expect.p_r != pad.p_r || expect.p_t != pad.p_t ||
      expect.p_b != pad.p_b) {
    throw ShapeError("apply_padding: padding was not produced for this extent");
  }
  BevImage out(padded_extent(img.extent, pad));
  for (int c = 0; c < kBevChannels; ++c) {
    for (int row = 0; row < img.height; ++row) {
      for (int col = 0; col < img.width; ++col) {
        out.at(c, row + pad.p_t, col + pad.p_l) = img.at(c, row, col);
      }
    }
  }
  return out;
}

BevImage mod_shift(const BevImage& img, int k) {
  if (k < 1) throw ShapeError("mod_shift: k must be >= 1");
  if (img.width % k != 0 || img.height % k != 0) {
    throw ShapeError("mod_shift: image dims must be divisible by k");
  }
  const PaddingSpec pad = mod_padding(img.extent, k);
  PixelExtent e{img.extent.x0 - pad.p_l, img.extent.x1 - pad.p_l,
                img.extent.y0 - pad.p_t, img.extent.y1 - pad.p_t};
  BevImage out(e);
  for (int c = 0; c < kBevChannels; ++c) {
    for (int row = 0; row + pad.p_t < img.height; ++row) {
      for (int col = 0; col + pad.p_l < img.width; ++col) {
        out.at(c, row + pad.p_t, col + pad.p_l) = img.at(c, row, col);
      }
    }
  }
  return out;
}

Padding3D mod_padding_3d(const Extent3D& extent, int k) {
  if (k < 1) throw ShapeError("mod_padding_3d: k must be >= 1");
  Padding3D p;
  p.k = k;
  p.p_l = static_cast<int>(pos_mod(extent.x0, k));
  p.p_r = static_cast<int>(pos_mod(-extent.x1, k));
  p.p_t = static_cast<int>(pos_mod(extent.y0, k));
  p.p_b = static_cast<int>(pos_mod(-extent.y1, k));
  p.p_front = static_cast<int>(pos_mod(extent.z0, k));
  p.p_back = static_cast<int>(pos_mod(-extent.z1, k));
  return p;
}

FixelExtent fixel_origin(const PixelExtent& padded, int k) {
  if (k < 1) throw ShapeError("fixel_origin: k must be >= 1");
  if (pos_mod(padded.x0, k) != 0 || pos_mod(padded.x1, k) != 0 ||
      pos_mod(padded.y0, k) != 0 || pos_mod(padded.y1, k) != 0) {
    throw ShapeError("fixel_origin: extent bounds not divisible by k");
  }
  auto div = [k](std::int64_t v) { return (v - pos_mod(v, k)) / k; };
  return FixelExtent{div(padded.x0), div(padded.x1), div(padded.y0), div(padded.y1)};
}

}  // namespace coopdet
