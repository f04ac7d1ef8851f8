#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopdet/detect.hpp"
#include "coopdet/geometry.hpp"

namespace coopdet {

enum class TargetClass : int { vehicle = 0, pedestrian = 1 };

inline constexpr double kVehicleFootprint[2] = {4.5, 2.0};
inline constexpr double kPedestrianFootprint[2] = {0.5, 0.5};
inline constexpr double kVehicleHeight[2] = {0.0, 1.8};
inline constexpr double kPedestrianHeight[2] = {0.0, 1.7};
inline constexpr double kOccluderHeight[2] = {0.0, 4.5};

struct Target {
  TargetClass cls = TargetClass::vehicle;
  double cx = 0, cy = 0, yaw = 0;

  double length() const {
    return cls == TargetClass::vehicle ? kVehicleFootprint[0] : kPedestrianFootprint[0];
  }
  double width() const {
    return cls == TargetClass::vehicle ? kVehicleFootprint[1] : kPedestrianFootprint[1];
  }
  // Axis-aligned bounding box of the rotated footprint, in global meters.
  Box aabb() const;
};

struct Occluder {
  double cx = 0, cy = 0, yaw = 0;
  double length = 6.0, width = 0.8;
};

struct Scene {
  std::uint64_t seed = 0;
  Pose2D ego_pose, coop_pose;
  std::vector<Target> targets;
  std::vector<Occluder> occluders;
  int occluded_target = -1;  // hidden from ego, visible to coop (when >= 0)
};

struct SceneParams {
  int min_targets = 2;
  int max_targets = 4;
  double pedestrian_fraction = 0.25;
  bool occlusion = true;
  bool pedestrians_only = false;
  double placement_radius = 8.0;
  double min_separation = 3.5;
  int max_retries = 200;
  int ray_count = 720;
  double max_range = 40.0;
  int samples_per_hit = 5;
  GridSpec grid = GridSpec::tiny();
};

// Deterministic given the seed. With occlusion enabled, the designated
// target draws zero ego rays but at least one cooperative ray (verified by
// ray casting during generation).
Scene generate_scene(std::uint64_t seed, const SceneParams& params);

// Equally spaced azimuths in the sensor frame; nearest edge intersection
// within max_range; each hit emits samples_per_hit points whose heights are
// drawn uniformly from the hit object's height extent. Points are returned
// in the sensor frame.
PointCloud simulate_lidar(const Scene& scene, const Pose2D& pose, int ray_count,
                          double max_range = 40.0, int samples_per_hit = 5,
                          std::uint64_t seed = 0);

// Hit counts per target index, for occlusion checks.
std::vector<int> ray_hits_per_target(const Scene& scene, const Pose2D& pose,
                                     int ray_count, double max_range);

struct Frame {
  int id = 0;
  Pose2D ego_pose, coop_pose;
  PointCloud ego_cloud, coop_cloud;
  std::vector<GtBox> gt;
};

struct DatasetManifest {
  std::string split;
  std::uint64_t seed = 0;
  int frame_count = 0;
  SceneParams params;
};

Frame make_frame(int id, std::uint64_t dataset_seed, const SceneParams& params);

void write_dataset(const std::string& dir, const std::string& split,
                   std::uint64_t seed, const std::vector<Frame>& frames,
                   const SceneParams& params);
std::pair<DatasetManifest, std::vector<Frame>> read_dataset(const std::string& dir);

// Seed derivation shared by dataset generation and tests.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace coopdet
