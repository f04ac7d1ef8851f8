#include <cmath>

#include "coopdet/bev.hpp"
#include "coopdet/geometry.hpp"

namespace coopdet {

PointCloud rotate_to_global(const PointCloud& cloud, double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    out.push_back({c * p.x - s * p.y, s * p.x + c * p.y, p.z});
  }
  return out;
}

PixelExtent world_anchor(const Pose2D& pose, const GridSpec& spec) {
  PixelExtent e;
  e.x0 = static_cast<std::int64_t>(std::floor((pose.x - spec.range) * spec.resolution));
  e.x1 = e.x0 + spec.width_px;
  e.y0 = static_cast<std::int64_t>(std::floor((pose.y - spec.range) * spec.resolution));
  e.y1 = e.y0 + spec.height_px;
  return e;
}

BevImage rasterize(const PointCloud& cloud_global, const Pose2D& pose,
                   const PixelExtent& extent, const GridSpec& spec) {
  BevImage img(extent);
  std::vector<std::uint32_t> counts(img.data.size(), 0);
  for (const auto& p : cloud_global) {
    const double ax = p.x + pose.x;
    const double ay = p.y + pose.y;
    int bin = -1;
    for (int b = 0; b < kBevChannels; ++b) {
      if (p.z >= kHeightBinEdges[b] && p.z < kHeightBinEdges[b + 1]) {
        bin = b;
        break;
      }
    }
    if (bin < 0) continue;
    const std::int64_t px = static_cast<std::int64_t>(std::floor(ax * spec.resolution));
    const std::int64_t py = static_cast<std::int64_t>(std::floor(ay * spec.resolution));
    if (px < extent.x0 || px >= extent.x1 || py < extent.y0 || py >= extent.y1) continue;
    const int col = static_cast<int>(px - extent.x0);
    const int row = static_cast<int>(py - extent.y0);
    ++counts[(static_cast<std::size_t>(bin) * img.height + row) * img.width + col];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint32_t c = counts[i] > 255 ? 255 : counts[i];
    img.data[i] = static_cast<float>(c) / 255.0f;
  }
  return img;
}

}  // namespace coopdet
