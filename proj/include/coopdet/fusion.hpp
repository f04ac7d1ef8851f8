#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "coopdet/errors.hpp"
#include "coopdet/geometry.hpp"
#include "coopdet/tensor.hpp"

namespace coopdet {

enum class AlignmentMode { tma, nma };

// Place remote content into an h x w grid at an integer cell offset; cells
// without remote coverage are zero.
template <class T>
Tensor<T> place_at_offset(const Tensor<T>& remote, std::int64_t dx, std::int64_t dy,
                          int h, int w) {
  Tensor<T> out(remote.c, h, w);
  for (int c = 0; c < remote.c; ++c) {
    for (int r = 0; r < h; ++r) {
      const std::int64_t rr = r - dy;
      if (rr < 0 || rr >= remote.h) continue;
      for (int col = 0; col < w; ++col) {
        const std::int64_t cc = col - dx;
        if (cc < 0 || cc >= remote.w) continue;
        out.at(c, r, col) = remote.at(c, static_cast<int>(rr), static_cast<int>(cc));
      }
    }
  }
  return out;
}

// Adjoint of place_at_offset: gather an ego-grid gradient back onto the
// remote grid.
template <class T>
Tensor<T> gather_from_offset(const Tensor<T>& ego_grad, std::int64_t dx,
                             std::int64_t dy, int remote_h, int remote_w) {
  Tensor<T> out(ego_grad.c, remote_h, remote_w);
  for (int c = 0; c < ego_grad.c; ++c) {
    for (int r = 0; r < ego_grad.h; ++r) {
      const std::int64_t rr = r - dy;
      if (rr < 0 || rr >= remote_h) continue;
      for (int col = 0; col < ego_grad.w; ++col) {
        const std::int64_t cc = col - dx;
        if (cc < 0 || cc >= remote_w) continue;
        out.at(c, static_cast<int>(rr), static_cast<int>(cc)) += ego_grad.at(c, r, col);
      }
    }
  }
  return out;
}

// Exact-integer translation on the shared global fixel lattice.
template <class T>
FeatureMap<T> align_tma(const FeatureMap<T>& remote, std::int64_t ego_gx0,
                        std::int64_t ego_gy0, int h, int w) {
  if (!remote.has_origin)
    throw ShapeError("align_tma: remote feature map has no fixel origin");
  FeatureMap<T> out;
  out.data = place_at_offset(remote.data, remote.gx0 - ego_gx0,
                             remote.gy0 - ego_gy0, h, w);
  out.has_origin = true;
  out.gx0 = ego_gx0;
  out.gy0 = ego_gy0;
  return out;
}

// Ablation baseline: the offset is the pose difference rounded to whole
// fixels (half away from zero), reintroducing up to half a fixel of error.
inline std::pair<std::int64_t, std::int64_t> nma_offset(const Pose2D& remote_pose,
                                                        const Pose2D& ego_pose,
                                                        const GridSpec& grid, int k) {
  const double scale = grid.resolution / k;
  return {static_cast<std::int64_t>(std::round((remote_pose.x - ego_pose.x) * scale)),
          static_cast<std::int64_t>(std::round((remote_pose.y - ego_pose.y) * scale))};
}

template <class T>
FeatureMap<T> align_nma(const FeatureMap<T>& remote, const Pose2D& remote_pose,
                        const Pose2D& ego_pose, const GridSpec& grid, int k,
                        int h, int w) {
  const auto [dx, dy] = nma_offset(remote_pose, ego_pose, grid, k);
  FeatureMap<T> out;
  out.data = place_at_offset(remote.data, dx, dy, h, w);
  out.has_origin = false;
  return out;
}

// Element-wise summation fusion. Out-of-coverage remote cells are zero, so
// single-vehicle operation is the degenerate case.
template <class T>
Tensor<T> fuse(const Tensor<T>& ego, const Tensor<T>& aligned_remote) {
  if (!ego.same_shape(aligned_remote)) throw ShapeError("fuse: dim mismatch");
  Tensor<T> out = ego;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += aligned_remote.v[i];
  return out;
}

}  // namespace coopdet
