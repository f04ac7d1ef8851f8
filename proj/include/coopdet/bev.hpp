#pragma once

#include <cstdint>
#include <vector>

#include "coopdet/geometry.hpp"

namespace coopdet {

// 3-channel occupancy-density raster on the global pixel lattice.
// Channel c covers height bin [2c-1, 2c+1) meters; values are clipped point
// counts divided by 255, so every cell lies in [0,1].
// Layout: channel-major, then row-major; row index = global y pixel - y0.
struct BevImage {
  PixelExtent extent;
  int width = 0;
  int height = 0;
  std::vector<float> data;  // 3 * height * width

  BevImage() = default;
  BevImage(const PixelExtent& e)
      : extent(e),
        width(static_cast<int>(e.width())),
        height(static_cast<int>(e.height())),
        data(static_cast<std::size_t>(3) * e.width() * e.height(), 0.0f) {}

  float& at(int c, int row, int col) {
    return data[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  float at(int c, int row, int col) const {
    return data[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
};

inline constexpr int kBevChannels = 3;
inline constexpr double kHeightBinEdges[4] = {-1.0, 1.0, 3.0, 5.0};

// Rasterize a rotation-aligned cloud. Absolute point position is the rotated
// point plus (pose.x, pose.y); points outside the extent or the height bins
// are discarded.
BevImage rasterize(const PointCloud& cloud_global, const Pose2D& pose,
                   const PixelExtent& extent, const GridSpec& spec);

}  // namespace coopdet
