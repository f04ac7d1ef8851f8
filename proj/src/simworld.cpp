#include "coopdet/simworld.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "coopdet/errors.hpp"

namespace fs = std::filesystem;

namespace coopdet {

namespace {

struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

struct Seg {
  double x0, y0, x1, y1;
};

// Rotated rectangle edges.
void rect_edges(double cx, double cy, double yaw, double length, double width,
                Seg out[4]) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hx = length / 2, hy = width / 2;
  double px[4], py[4];
  const double corners[4][2] = {{hx, hy}, {-hx, hy}, {-hx, -hy}, {hx, -hy}};
  for (int i = 0; i < 4; ++i) {
    px[i] = cx + c * corners[i][0] - s * corners[i][1];
    py[i] = cy + s * corners[i][0] + c * corners[i][1];
  }
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    out[i] = Seg{px[i], py[i], px[j], py[j]};
  }
}

// Ray (ox,oy)+t(dx,dy) vs segment; returns smallest t >= 0 or nullopt.
std::optional<double> ray_segment(double ox, double oy, double dx, double dy,
                                  const Seg& seg) {
  const double ex = seg.x1 - seg.x0, ey = seg.y1 - seg.y0;
  const double denom = dx * ey - dy * ex;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double qx = seg.x0 - ox, qy = seg.y0 - oy;
  const double t = (qx * ey - qy * ex) / denom;
  const double u = (qx * dy - qy * dx) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

struct Obstacle {
  Seg edges[4];
  int target_index;  // -1 for occluders
  const double* height;
};

std::vector<Obstacle> build_obstacles(const Scene& scene) {
  std::vector<Obstacle> obs;
  for (std::size_t i = 0; i < scene.targets.size(); ++i) {
    const Target& t = scene.targets[i];
    Obstacle o;
    o.target_index = static_cast<int>(i);
    o.height = t.cls == TargetClass::vehicle ? kVehicleHeight : kPedestrianHeight;
    rect_edges(t.cx, t.cy, t.yaw, t.length(), t.width(), o.edges);
    obs.push_back(o);
  }
  for (const auto& oc : scene.occluders) {
    Obstacle o;
    o.target_index = -1;
    o.height = kOccluderHeight;
    rect_edges(oc.cx, oc.cy, oc.yaw, oc.length, oc.width, o.edges);
    obs.push_back(o);
  }
  return obs;
}

struct Hit {
  double t;
  int obstacle;
};

std::optional<Hit> cast_ray(const std::vector<Obstacle>& obstacles, double ox,
                            double oy, double dx, double dy, double max_range) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (const Seg& e : obstacles[i].edges) {
      const auto t = ray_segment(ox, oy, dx, dy, e);
      if (t && *t <= max_range && (!best || *t < best->t)) {
        best = Hit{*t, static_cast<int>(i)};
      }
    }
  }
  return best;
}

bool boxes_overlap(const Box& a, const Box& b, double clearance) {
  return std::abs(a.cx - b.cx) * 2 < a.w + b.w + 2 * clearance &&
         std::abs(a.cy - b.cy) * 2 < a.h + b.h + 2 * clearance;
}

bool box_inside_grid(const Box& b, const Pose2D& pose, const GridSpec& grid) {
  return b.cx - b.w / 2 > pose.x - grid.range && b.cx + b.w / 2 < pose.x + grid.range &&
         b.cy - b.h / 2 > pose.y - grid.range && b.cy + b.h / 2 < pose.y + grid.range;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (salt + 1));
  Rng r(s);
  return r.next();
}

Box Target::aabb() const {
  const double c = std::abs(std::cos(yaw)), s = std::abs(std::sin(yaw));
  Box b;
  b.cx = cx;
  b.cy = cy;
  b.w = c * length() + s * width();
  b.h = s * length() + c * width();
  return b;
}

std::vector<int> ray_hits_per_target(const Scene& scene, const Pose2D& pose,
                                     int ray_count, double max_range) {
  const auto obstacles = build_obstacles(scene);
  std::vector<int> hits(scene.targets.size(), 0);
  for (int i = 0; i < ray_count; ++i) {
    const double phi = pose.heading + 2.0 * kPi * i / ray_count;
    const auto h = cast_ray(obstacles, pose.x, pose.y, std::cos(phi), std::sin(phi),
                            max_range);
    if (h && obstacles[h->obstacle].target_index >= 0)
      ++hits[obstacles[h->obstacle].target_index];
  }
  return hits;
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Rng rng(mix_seed(seed, 0x5ce7e5 + attempt));
    Scene scene;
    scene.seed = seed;
    scene.ego_pose = {-6.0 + rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0),
                      rng.uniform(-kPi, kPi)};
    scene.coop_pose = {6.0 + rng.uniform(-1.0, 1.0), rng.uniform(-2.0, 2.0),
                       rng.uniform(-kPi, kPi)};
    const int n = params.min_targets +
                  (params.max_targets > params.min_targets
                       ? rng.uniform_int(params.max_targets - params.min_targets + 1)
                       : 0);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      bool placed = false;
      for (int tries = 0; tries < 50; ++tries) {
        Target t;
        t.cls = params.pedestrians_only
                    ? TargetClass::pedestrian
                    : (rng.uniform() < params.pedestrian_fraction
                           ? TargetClass::pedestrian
                           : TargetClass::vehicle);
        const double ang = rng.uniform(-kPi, kPi);
        const double rad = params.placement_radius * std::sqrt(rng.uniform());
        t.cx = rad * std::cos(ang);
        t.cy = rad * std::sin(ang);
        t.yaw = rng.uniform(-kPi, kPi);
        const Box b = t.aabb();
        bool clash = !box_inside_grid(b, scene.ego_pose, params.grid) ||
                     !box_inside_grid(b, scene.coop_pose, params.grid);
        for (const auto& other : scene.targets) {
          if (boxes_overlap(b, other.aabb(), params.min_separation)) clash = true;
        }
        // keep clear of both observers
        const Box ego_box{scene.ego_pose.x, scene.ego_pose.y, 3.0, 3.0};
        const Box coop_box{scene.coop_pose.x, scene.coop_pose.y, 3.0, 3.0};
        if (boxes_overlap(b, ego_box, 1.0) || boxes_overlap(b, coop_box, 1.0))
          clash = true;
        if (!clash) {
          scene.targets.push_back(t);
          placed = true;
          break;
        }
      }
      if (!placed) ok = false;
    }
    if (!ok || scene.targets.empty()) continue;

    if (params.occlusion) {
      const Target& t = scene.targets[0];
      const double dx = t.cx - scene.ego_pose.x;
      const double dy = t.cy - scene.ego_pose.y;
      const double dist = std::hypot(dx, dy);
      Occluder oc;
      const double frac = rng.uniform(0.45, 0.6);
      oc.cx = scene.ego_pose.x + frac * dx;
      oc.cy = scene.ego_pose.y + frac * dy;
      oc.yaw = std::atan2(dy, dx) + kPi / 2.0;
      oc.length = std::max(6.0, t.aabb().w + t.aabb().h);
      oc.width = 0.8;
      (void)dist;
      scene.occluders.push_back(oc);
      scene.occluded_target = 0;

      // occluder must not sit on another target or an observer
      const Box ob{oc.cx, oc.cy, oc.length, oc.length};
      bool clash = false;
      for (std::size_t i = 1; i < scene.targets.size(); ++i)
        if (boxes_overlap(ob, scene.targets[i].aabb(), 0.5)) clash = true;
      const Box ego_box{scene.ego_pose.x, scene.ego_pose.y, 3.0, 3.0};
      const Box coop_box{scene.coop_pose.x, scene.coop_pose.y, 3.0, 3.0};
      if (boxes_overlap(ob, ego_box, 0.5) || boxes_overlap(ob, coop_box, 0.5))
        clash = true;
      if (clash) continue;

      const auto ego_hits =
          ray_hits_per_target(scene, scene.ego_pose, params.ray_count, params.max_range);
      const auto coop_hits =
          ray_hits_per_target(scene, scene.coop_pose, params.ray_count, params.max_range);
      if (ego_hits[0] != 0 || coop_hits[0] == 0) continue;
      // remaining targets should be visible to someone
      bool orphan = false;
      for (std::size_t i = 1; i < scene.targets.size(); ++i)
        if (ego_hits[i] == 0 && coop_hits[i] == 0) orphan = true;
      if (orphan) continue;
    }
    return scene;
  }
  throw DataError("generate_scene: placement failed after bounded retries");
}

PointCloud simulate_lidar(const Scene& scene, const Pose2D& pose, int ray_count,
                          double max_range, int samples_per_hit, std::uint64_t seed) {
  if (ray_count < 1) throw ShapeError("simulate_lidar: ray_count must be >= 1");
  const auto obstacles = build_obstacles(scene);
  Rng rng(mix_seed(scene.seed, seed ^ 0xc10dull));
  PointCloud cloud;
  const double ch = std::cos(-pose.heading), sh = std::sin(-pose.heading);
  for (int i = 0; i < ray_count; ++i) {
    const double phi = pose.heading + 2.0 * kPi * i / ray_count;
    const auto h =
        cast_ray(obstacles, pose.x, pose.y, std::cos(phi), std::sin(phi), max_range);
    if (!h) continue;
    const double hx = pose.x + h->t * std::cos(phi);
    const double hy = pose.y + h->t * std::sin(phi);
    const double* zext = obstacles[h->obstacle].height;
    for (int sidx = 0; sidx < samples_per_hit; ++sidx) {
      const double z = rng.uniform(zext[0], zext[1]);
      const double rx = hx - pose.x, ry = hy - pose.y;
      cloud.push_back({ch * rx - sh * ry, sh * rx + ch * ry, z});
    }
  }
  return cloud;
}

Frame make_frame(int id, std::uint64_t dataset_seed, const SceneParams& params) {
  const std::uint64_t frame_seed = mix_seed(dataset_seed, static_cast<std::uint64_t>(id));
  const Scene scene = generate_scene(frame_seed, params);
  Frame f;
  f.id = id;
  f.ego_pose = scene.ego_pose;
  f.coop_pose = scene.coop_pose;
  f.ego_cloud = simulate_lidar(scene, scene.ego_pose, params.ray_count,
                               params.max_range, params.samples_per_hit, 1);
  f.coop_cloud = simulate_lidar(scene, scene.coop_pose, params.ray_count,
                                params.max_range, params.samples_per_hit, 2);
  for (const auto& t : scene.targets) {
    f.gt.push_back({static_cast<int>(t.cls), t.aabb()});
  }
  return f;
}

namespace {

constexpr int kDatasetVersion = 1;

void write_cloud(const fs::path& path, const PointCloud& cloud) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw MissingFileError("cannot write " + path.string());
  for (const auto& p : cloud) {
    for (double v : {p.x, p.y, p.z}) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(bits >> (8 * i));
      f.write(b, 4);
    }
  }
}

PointCloud read_cloud(const fs::path& path, std::size_t expected_points) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingFileError("missing cloud file " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
  if (buf.size() != expected_points * 12)
    throw LengthMismatchError("cloud file length mismatch: " + path.string());
  PointCloud cloud;
  cloud.reserve(expected_points);
  for (std::size_t i = 0; i < expected_points; ++i) {
    double xyz[3];
    for (int k = 0; k < 3; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(
                    static_cast<std::uint8_t>(buf[i * 12 + k * 4 + b]))
                << (8 * b);
      xyz[k] = std::bit_cast<float>(bits);
    }
    cloud.push_back({xyz[0], xyz[1], xyz[2]});
  }
  return cloud;
}

std::string cloud_name(int id, const char* who) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "clouds/frame_%06d_%s.f32", id, who);
  return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const std::string& split,
                   std::uint64_t seed, const std::vector<Frame>& frames,
                   const SceneParams& params) {
  fs::create_directories(fs::path(dir) / "clouds");
  nlohmann::json m;
  m["format_version"] = kDatasetVersion;
  m["split"] = split;
  m["seed"] = seed;
  m["frame_count"] = frames.size();
  m["sensor"] = {{"resolution", params.grid.resolution},
                 {"range", params.grid.range},
                 {"width_px", params.grid.width_px},
                 {"height_px", params.grid.height_px},
                 {"ray_count", params.ray_count},
                 {"max_range", params.max_range},
                 {"samples_per_hit", params.samples_per_hit}};
  m["scene"] = {{"min_targets", params.min_targets},
                {"max_targets", params.max_targets},
                {"pedestrian_fraction", params.pedestrian_fraction},
                {"pedestrians_only", params.pedestrians_only},
                {"occlusion", params.occlusion},
                {"placement_radius", params.placement_radius},
                {"min_separation", params.min_separation}};
  nlohmann::json jframes = nlohmann::json::array();
  for (const auto& f : frames) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["ego_pose"] = {f.ego_pose.x, f.ego_pose.y, f.ego_pose.heading};
    jf["coop_pose"] = {f.coop_pose.x, f.coop_pose.y, f.coop_pose.heading};
    nlohmann::json jgt = nlohmann::json::array();
    for (const auto& g : f.gt) {
      jgt.push_back({{"class", g.cls},
                     {"box", {g.box.cx, g.box.cy, g.box.w, g.box.h}}});
    }
    jf["targets"] = jgt;
    jf["ego_cloud"] = cloud_name(f.id, "ego");
    jf["ego_points"] = f.ego_cloud.size();
    jf["coop_cloud"] = cloud_name(f.id, "coop");
    jf["coop_points"] = f.coop_cloud.size();
    jframes.push_back(jf);
    write_cloud(fs::path(dir) / cloud_name(f.id, "ego"), f.ego_cloud);
    write_cloud(fs::path(dir) / cloud_name(f.id, "coop"), f.coop_cloud);
  }
  m["frames"] = jframes;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw MissingFileError("cannot write manifest in " + dir);
  out << m.dump(2) << "\n";
}

std::pair<DatasetManifest, std::vector<Frame>> read_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw MissingFileError("missing manifest.json in " + dir);
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest parse error: ") + e.what());
  }
  if (!m.contains("format_version") || m["format_version"].get<int>() != kDatasetVersion)
    throw UnsupportedVersionError("unsupported dataset format version");
  DatasetManifest manifest;
  manifest.split = m.value("split", "");
  manifest.seed = m["seed"].get<std::uint64_t>();
  manifest.frame_count = m["frame_count"].get<int>();
  const auto& sensor = m["sensor"];
  manifest.params.grid.resolution = sensor["resolution"].get<double>();
  manifest.params.grid.range = sensor["range"].get<double>();
  manifest.params.grid.width_px = sensor["width_px"].get<int>();
  manifest.params.grid.height_px = sensor["height_px"].get<int>();
  manifest.params.ray_count = sensor["ray_count"].get<int>();
  manifest.params.max_range = sensor["max_range"].get<double>();
  manifest.params.samples_per_hit = sensor["samples_per_hit"].get<int>();
  const auto& sc = m["scene"];
  manifest.params.min_targets = sc["min_targets"].get<int>();
  manifest.params.max_targets = sc["max_targets"].get<int>();
  manifest.params.pedestrian_fraction = sc["pedestrian_fraction"].get<double>();
  manifest.params.pedestrians_only = sc.value("pedestrians_only", false);
  manifest.params.occlusion = sc["occlusion"].get<bool>();
  manifest.params.placement_radius = sc["placement_radius"].get<double>();
  manifest.params.min_separation = sc["min_separation"].get<double>();

  std::vector<Frame> frames;
  for (const auto& jf : m["frames"]) {
    Frame f;
    f.id = jf["id"].get<int>();
    f.ego_pose = {jf["ego_pose"][0].get<double>(), jf["ego_pose"][1].get<double>(),
                  jf["ego_pose"][2].get<double>()};
    f.coop_pose = {jf["coop_pose"][0].get<double>(), jf["coop_pose"][1].get<double>(),
                   jf["coop_pose"][2].get<double>()};
    for (const auto& jg : jf["targets"]) {
      GtBox g;
      g.cls = jg["class"].get<int>();
      g.box = {jg["box"][0].get<double>(), jg["box"][1].get<double>(),
               jg["box"][2].get<double>(), jg["box"][3].get<double>()};
      f.gt.push_back(g);
    }
    f.ego_cloud = read_cloud(fs::path(dir) / jf["ego_cloud"].get<std::string>(),
                             jf["ego_points"].get<std::size_t>());
    f.coop_cloud = read_cloud(fs::path(dir) / jf["coop_cloud"].get<std::string>(),
                              jf["coop_points"].get<std::size_t>());
    frames.push_back(std::move(f));
  }
  if (static_cast<int>(frames.size()) != manifest.frame_count)
    throw LengthMismatchError("manifest frame count mismatch");
  return {manifest, frames};
}

}  // namespace coopdet
