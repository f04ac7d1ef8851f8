#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace coopdet {

inline constexpr double kPi = 3.14159265358979323846;

// Global-frame pose: x east, y north, heading CCW from +x.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

// Normalize an angle to [-pi, pi).
inline double normalize_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

using PointCloud = std::vector<Point3>;

// BEV raster geometry. Defaults follow the 40 m / 832 px / 10.4 ppm sensor
// setup; tiny() is the desk-scale configuration used by the toy experiments.
struct GridSpec {
  double resolution = 10.4;  // pixels per meter
  double range = 40.0;       // meters (half-extent around the observer)
  int width_px = 832;
  int height_px = 832;

  static GridSpec defaults() { return GridSpec{}; }
  static GridSpec tiny() { return GridSpec{2.0, 16.0, 64, 64}; }

  double meters_per_px() const { return 1.0 / resolution; }
  bool valid() const {
    return resolution > 0.0 && range > 0.0 && width_px > 0 && height_px > 0 &&
           width_px == static_cast<int>(std::ceil(2.0 * range * resolution)) &&
           height_px == width_px;
  }
};

// Half-open global pixel index ranges [x0,x1) x [y0,y1).
struct PixelExtent {
  std::int64_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  std::int64_t width() const { return x1 - x0; }
  std::int64_t height() const { return y1 - y0; }
  bool operator==(const PixelExtent&) const = default;
};

// Rotate (x,y) CCW by heading; z passes through.
PointCloud rotate_to_global(const PointCloud& cloud, double heading);

// Pixel extent of the observer's raster window on the global pixel lattice.
PixelExtent world_anchor(const Pose2D& pose, const GridSpec& spec);

}  // namespace coopdet
