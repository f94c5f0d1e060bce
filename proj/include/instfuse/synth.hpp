// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instfuse/affinity.hpp"
#include "instfuse/camera.hpp"
#include "instfuse/color.hpp"
#include "instfuse/io/frames.hpp"
#include "instfuse/merging.hpp"
#include "instfuse/parallel.hpp"
#include "instfuse/point_cloud.hpp"

namespace instfuse {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seeded random source with hand-rolled value mappings. The standard
/// distributions are implementation-defined, so going through our own
/// uniform/normal transforms keeps generated scenes byte-identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (fresh pair each call, no cached state).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1] keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform index in [0, n).
  std::size_t pick(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  std::mt19937_64 engine_;
};

/// Axis-aligned scene primitive: a solid box or a finite plane patch
/// (size zero along normal_axis). two_tone paints the halves along the
/// longest axis in different colors, giving objects part-scale texture.
struct SynthObject {
  std::string type = "box";  // "box" | "plane"
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  Vec3 color_b = Vec3::Zero();
  bool two_tone = false;
  int normal_axis = 2;  // plane only

  Vec3 lo() const { return center - size / 2.0; }
  Vec3 hi() const { return center + size / 2.0; }

  int longest_axis() const {
    int a = 0;
    for (int k = 1; k < 3; ++k)
      if (size[k] > size[a]) a = k;
    return a;
  }

  void validate() const {
    if (type != "box" && type != "plane")
      throw std::invalid_argument("scene: unknown object type '" + type + "'");
    for (int a = 0; a < 3; ++a)
      if (color[a] < 0.0 || color[a] > 1.0 || color_b[a] < 0.0 || color_b[a] > 1.0)
        throw std::invalid_argument("scene: object color outside [0,1]");
    if (type == "box") {
      for (int a = 0; a < 3; ++a)
        if (!(size[a] > 0.0)) throw std::invalid_argument("scene: box size must be positive");
    } else {
      if (normal_axis < 0 || normal_axis > 2)
        throw std::invalid_argument("scene: plane normal_axis must be 0, 1 or 2");
      for (int a = 0; a < 3; ++a) {
        if (a == normal_axis && size[a] != 0.0)
          throw std::invalid_argument("scene: plane must have zero size along its normal");
        if (a != normal_axis && !(size[a] > 0.0))
          throw std::invalid_argument("scene: plane extent must be positive");
      }
    }
  }
};

struct OrbitSpec {
  int count = 8;
  double radius = 4.0;
  double height = 2.5;   // camera z in world units
  int width = 640, height_px = 480;
  double fx = 525.0, fy = 525.0, cx = 319.5, cy = 239.5;
  std::optional<Vec3> target;  // defaults to the room center
};

struct MaskCorruption {
  double part_split_prob = 0.0;
  std::string split_axis_policy = "longer";  // "longer" | "u" | "v"
  int boundary_noise_px = 0;
};

struct NoiseSpec {
  double color_sigma = 0.0;
  double position_sigma = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 1;
  Vec3 room_min = Vec3::Zero();
  Vec3 room_max = Vec3::Zero();
  double points_per_m2 = 1000.0;
  std::vector<SynthObject> objects;
  std::vector<CameraFrame> cameras;  // explicit poses; orbit expands into this
  MaskCorruption corruption;
  NoiseSpec noise;

  void validate() const {
    if (objects.empty()) throw std::invalid_argument("scene: needs at least one object");
    if (cameras.empty()) throw std::invalid_argument("scene: needs at least one camera");
    if (!(points_per_m2 > 0.0)) throw std::invalid_argument("scene: density must be positive");
    for (int a = 0; a < 3; ++a)
      if (!(room_max[a] > room_min[a]))
        throw std::invalid_argument("scene: room bounds must have positive extent");
    for (const SynthObject& o : objects) {
      o.validate();
      for (int a = 0; a < 3; ++a)
        if (o.lo()[a] < room_min[a] - 1e-9 || o.hi()[a] > room_max[a] + 1e-9)
          throw std::invalid_argument("scene: object outside room bounds");
    }
    for (const CameraFrame& c : cameras) c.validate();
    if (corruption.part_split_prob < 0.0 || corruption.part_split_prob > 1.0)
      throw std::invalid_argument("scene: part_split_prob outside [0,1]");
    if (corruption.split_axis_policy != "longer" && corruption.split_axis_policy != "u" &&
        corruption.split_axis_policy != "v")
      throw std::invalid_argument("scene: unknown split_axis_policy");
    if (corruption.boundary_noise_px < 0)
      throw std::invalid_argument("scene: boundary_noise_px must be >= 0");
    if (noise.color_sigma < 0.0 || noise.position_sigma < 0.0)
      throw std::invalid_argument("scene: noise sigmas must be >= 0");
  }
};

/// Camera ring around `target`, all poses looking at it. OpenCV axes:
/// z forward, x right, y down; world up is +z.
inline std::vector<CameraFrame> orbit_cameras(const OrbitSpec& orbit, const Vec3& default_target) {
  if (orbit.count < 1) throw std::invalid_argument("orbit: camera count must be >= 1");
  const Vec3 target = orbit.target.value_or(default_target);
  std::vector<CameraFrame> cams;
  cams.reserve(static_cast<std::size_t>(orbit.count));
  for (int k = 0; k < orbit.count; ++k) {
    const double theta = 2.0 * 3.14159265358979323846 * k / orbit.count;
    const Vec3 pos(target.x() + orbit.radius * std::cos(theta),
                   target.y() + orbit.radius * std::sin(theta), orbit.height);
    const Vec3 forward = (target - pos).normalized();
    Vec3 right = forward.cross(Vec3(0.0, 0.0, 1.0));
    if (right.norm() < 1e-9) right = Vec3(1.0, 0.0, 0.0);  // looking straight down
    right.normalize();
    const Vec3 down = forward.cross(right).normalized() * -1.0;  // y points down in image
    CameraFrame cam;
    cam.frame_id = k;
    cam.fx = orbit.fx;
    cam.fy = orbit.fy;
    cam.cx = orbit.cx;
    cam.cy = orbit.cy;
    cam.width = orbit.width;
    cam.height = orbit.height_px;
    cam.cam_to_world = Eigen::Matrix4d::Identity();
    cam.cam_to_world.block<3, 1>(0, 0) = right;
    cam.cam_to_world.block<3, 1>(0, 1) = down;
    cam.cam_to_world.block<3, 1>(0, 2) = forward;
    cam.cam_to_world.block<3, 1>(0, 3) = pos;
    cams.push_back(cam);
  }
  return cams;
}

namespace detail {

/// Entry depth of a ray against an axis-aligned box, in camera z units
/// (the ray direction has unit z in camera space). Misses and rays starting
/// inside return no value; cameras inside objects are rejected up front.
inline std::optional<double> ray_box(const Vec3& origin, const Vec3& dir, const Vec3& lo,
                                     const Vec3& hi) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::fabs(dir[a]) < 1e-12) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - origin[a]) / dir[a];
    double tb = (hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
  }
  if (t_enter > t_exit || t_enter <= 1e-9) return std::nullopt;
  return t_enter;
}

inline std::optional<double> ray_plane_patch(const Vec3& origin, const Vec3& dir,
                                             const SynthObject& obj) {
  const int a = obj.normal_axis;
  if (std::fabs(dir[a]) < 1e-12) return std::nullopt;
  const double t = (obj.center[a] - origin[a]) / dir[a];
  if (t <= 1e-9) return std::nullopt;
  for (int k = 0; k < 3; ++k) {
    if (k == a) continue;
    const double c = origin[k] + t * dir[k];
    if (c < obj.lo()[k] || c > obj.hi()[k]) return std::nullopt;
  }
  return t;
}

struct RawFrame {
  DepthRaster depth;
  std::vector<int> object;  // per pixel: object index, -1 = background
};

/// Analytic render: nearest primitive along each pixel ray; ties go to the
/// lower object index (iteration keeps the first strictly nearer hit).
inline RawFrame render_frame(const std::vector<SynthObject>& objects, const CameraFrame& cam) {
  RawFrame out;
  out.depth.width = cam.width;
  out.depth.height = cam.height;
  out.depth.values.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0);
  out.object.assign(static_cast<std::size_t>(cam.width) * cam.height, -1);
  const Eigen::Matrix3d rot = cam.cam_to_world.block<3, 3>(0, 0);
  const Vec3 origin = cam.cam_to_world.block<3, 1>(0, 3);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir_cam((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
      const Vec3 dir = rot * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      int best_obj = -1;
      for (std::size_t o = 0; o < objects.size(); ++o) {
        const SynthObject& obj = objects[o];
        const std::optional<double> t = obj.type == "box"
                                            ? ray_box(origin, dir, obj.lo(), obj.hi())
                                            : ray_plane_patch(origin, dir, obj);
        if (t && *t < best) {
          best = *t;
          best_obj = static_cast<int>(o);
        }
      }
      if (best_obj >= 0) {
        const std::size_t pix = static_cast<std::size_t>(v) * cam.width + u;
        out.depth.values[pix] = best;
        out.object[pix] = best_obj;
      }
    }
  }
  return out;
}

/// Turn per-pixel object indices into a corrupted mask raster: optionally
/// split each object's mask in two along an image axis (fresh ids per part),
/// then jitter boundaries. Flips never put a nonzero id on a zero-depth
/// pixel, preserving the depth/mask consistency invariant.
inline MaskRaster corrupt_mask(const RawFrame& raw, std::size_t num_objects,
                               const MaskCorruption& corruption, Rng& rng) {
  const int w = raw.depth.width, h = raw.depth.height;
  MaskRaster mask;
  mask.width = w;
  mask.height = h;
  mask.ids.assign(static_cast<std::size_t>(w) * h, 0);

  // one probability draw per object, visible or not, so the stream does not
  // depend on what happens to be in frame
  std::vector<char> split(num_objects, 0);
  for (std::size_t o = 0; o < num_objects; ++o)
    split[o] = rng.uniform() < corruption.part_split_prob ? 1 : 0;

  std::vector<std::uint16_t> first_id(num_objects, 0);
  std::uint16_t next = 1;
  for (std::size_t o = 0; o < num_objects; ++o) {
    first_id[o] = next;
    next = static_cast<std::uint16_t>(next + (split[o] ? 2 : 1));
  }

  struct Bbox {
    int ulo = std::numeric_limits<int>::max(), uhi = -1;
    int vlo = std::numeric_limits<int>::max(), vhi = -1;
  };
  std::vector<Bbox> boxes(num_objects);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const int o = raw.object[static_cast<std::size_t>(v) * w + u];
      if (o < 0) continue;
      Bbox& b = boxes[static_cast<std::size_t>(o)];
      b.ulo = std::min(b.ulo, u);
      b.uhi = std::max(b.uhi, u);
      b.vlo = std::min(b.vlo, v);
      b.vhi = std::max(b.vhi, v);
    }

  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::size_t pix = static_cast<std::size_t>(v) * w + u;
      const int o = raw.object[pix];
      if (o < 0) continue;
      std::uint16_t id = first_id[static_cast<std::size_t>(o)];
      if (split[static_cast<std::size_t>(o)]) {
        const Bbox& b = boxes[static_cast<std::size_t>(o)];
        bool along_u;
        if (corruption.split_axis_policy == "u") along_u = true;
        else if (corruption.split_axis_policy == "v") along_u = false;
        else along_u = (b.uhi - b.ulo) >= (b.vhi - b.vlo);  // "longer", ties to u
        const bool second = along_u ? u > (b.ulo + b.uhi) / 2 : v > (b.vlo + b.vhi) / 2;
        if (second) id = static_cast<std::uint16_t>(id + 1);
      }
      mask.ids[pix] = id;
    }

  static const int du[4] = {1, -1, 0, 0};
  static const int dv[4] = {0, 0, 1, -1};
  for (int iter = 0; iter < corruption.boundary_noise_px; ++iter) {
    std::vector<std::uint16_t> next_ids = mask.ids;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const std::size_t pix = static_cast<std::size_t>(v) * w + u;
        bool boundary = false;
        for (int k = 0; k < 4 && !boundary; ++k) {
          const int uu = u + du[k], vv = v + dv[k];
          if (uu < 0 || uu >= w || vv < 0 || vv >= h) continue;
          if (mask.at(uu, vv) != mask.ids[pix]) boundary = true;
        }
        if (!boundary) continue;
        if (rng.uniform() >= 0.5) {
          rng.uniform();  // keep the per-pixel draw count fixed
          continue;
        }
        const std::size_t k = rng.pick(4);
        const int uu = u + du[k], vv = v + dv[k];
        if (uu < 0 || uu >= w || vv < 0 || vv >= h) continue;
        const std::uint16_t cand = mask.at(uu, vv);
        if (cand != 0 && raw.depth.values[pix] <= 0.0) continue;
        next_ids[pix] = cand;
      }
    mask.ids = std::move(next_ids);
  }
  return mask;
}

}  // namespace detail

struct SynthScene {
  PointCloud cloud;       // gt_labels filled
  Partition gt;           // instance id = source object index (renumbered)
  std::vector<Box3D> boxes;
  FrameSet frames;
};

/// Build a complete synthetic scene: sample object surfaces, render analytic
/// depth/mask rasters per camera, corrupt masks, and keep only points that
/// are actually visible somewhere — mirroring real scans, where unseen
/// geometry is never reconstructed in the first place.
inline SynthScene generate_scene(const SceneSpec& spec, unsigned threads = 1) {
  spec.validate();
  const std::vector<SynthObject>& objects = spec.objects;

  for (const CameraFrame& cam : spec.cameras) {
    const Vec3 pos = cam.cam_to_world.block<3, 1>(0, 3);
    for (std::size_t o = 0; o < objects.size(); ++o) {
      if (objects[o].type != "box") continue;
      const Vec3 lo = objects[o].lo(), hi = objects[o].hi();
      if (pos.x() > lo.x() && pos.x() < hi.x() && pos.y() > lo.y() && pos.y() < hi.y() &&
          pos.z() > lo.z() && pos.z() < hi.z())
        throw std::invalid_argument("scene: camera " + std::to_string(cam.frame_id) +
                                    " is inside object " + std::to_string(o));
    }
  }

  // surface sampling, serial in object order
  std::vector<Vec3> positions, colors;
  std::vector<int> labels;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const SynthObject& obj = objects[o];
    Rng rng(splitmix64(splitmix64(spec.seed ^ 0x5ce9e1c5a8d6f04bull) ^ o));
    const int split_axis = obj.longest_axis();

    // faces as (fixed axis, side); planes have a single face
    std::vector<std::pair<int, int>> faces;
    if (obj.type == "box") {
      for (int a = 0; a < 3; ++a) {
        faces.emplace_back(a, 0);
        faces.emplace_back(a, 1);
      }
    } else {
      faces.emplace_back(obj.normal_axis, 0);
    }
    for (const auto& [axis, side] : faces) {
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      const double area = obj.size[a1] * obj.size[a2];
      const long long count = std::max(1ll, std::llround(area * spec.points_per_m2));
      for (long long s = 0; s < count; ++s) {
        Vec3 p;
        p[axis] = side == 0 ? obj.lo()[axis] : obj.hi()[axis];
        p[a1] = rng.uniform(obj.lo()[a1], obj.hi()[a1]);
        p[a2] = rng.uniform(obj.lo()[a2], obj.hi()[a2]);
        Vec3 c = obj.two_tone && p[split_axis] > obj.center[split_axis] ? obj.color_b : obj.color;
        for (int k = 0; k < 3; ++k) {
          p[k] += spec.noise.position_sigma * rng.normal();
          c[k] = std::clamp(c[k] + spec.noise.color_sigma * rng.normal(), 0.0, 1.0);
        }
        positions.push_back(p);
        colors.push_back(c);
        labels.push_back(static_cast<int>(o));
      }
    }
  }
  if (positions.empty()) throw std::runtime_error("scene: zero sampled points");

  // analytic rasters, parallel over cameras
  std::vector<detail::RawFrame> raw(spec.cameras.size());
  parallel_for(spec.cameras.size(), threads,
               [&](std::size_t f) { raw[f] = detail::render_frame(objects, spec.cameras[f]); });

  for (std::size_t o = 0; o < objects.size(); ++o) {
    bool seen = false;
    for (const detail::RawFrame& rf : raw) {
      for (int idx : rf.object)
        if (idx == static_cast<int>(o)) {
          seen = true;
          break;
        }
      if (seen) break;
    }
    if (!seen)
      throw std::runtime_error("scene: object " + std::to_string(o) +
                               " is not visible in any frame; adjust the camera set");
  }

  // visibility filter: drop points no camera can confirm
  constexpr double kDepthTol = 0.05;
  std::vector<char> keep(positions.size(), 0);
  parallel_for(positions.size(), threads, [&](std::size_t i) {
    for (std::size_t f = 0; f < spec.cameras.size(); ++f) {
      const CameraFrame& cam = spec.cameras[f];
      const std::optional<Projection> pr = project_point(positions[i], cam);
      if (!pr) continue;
      const int u = round_half_up(pr->u), v = round_half_up(pr->v);
      if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) continue;
      const double d = raw[f].depth.at(u, v);
      if (d > 0.0 && std::fabs(pr->z - d) <= kDepthTol) {
        keep[i] = 1;
        return;
      }
    }
  });

  SynthScene scene;
  std::vector<long long> kept_per_object(objects.size(), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!keep[i]) continue;
    scene.cloud.positions.push_back(positions[i]);
    scene.cloud.colors.push_back(colors[i]);
    scene.cloud.gt_labels.push_back(labels[i]);
    ++kept_per_object[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t o = 0; o < objects.size(); ++o)
    if (kept_per_object[o] == 0)
      throw std::runtime_error("scene: zero sampled points survive for object " +
                               std::to_string(o));

  scene.gt.labels = scene.cloud.gt_labels;
  scene.gt.num_segments = static_cast<int>(objects.size());

  // ground-truth boxes: tight bounds of each object's surviving points,
  // padded a hair so boundary points are strictly inside and planes get
  // positive volume
  scene.boxes.resize(objects.size());
  std::vector<char> box_started(objects.size(), 0);
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    const auto o = static_cast<std::size_t>(scene.cloud.gt_labels[i]);
    Box3D& b = scene.boxes[o];
    if (!box_started[o]) {
      b.min = b.max = scene.cloud.positions[i];
      box_started[o] = 1;
    } else {
      b.min = b.min.cwiseMin(scene.cloud.positions[i]);
      b.max = b.max.cwiseMax(scene.cloud.positions[i]);
    }
  }
  for (Box3D& b : scene.boxes) {
    b.min -= Vec3::Constant(1e-3);
    b.max += Vec3::Constant(1e-3);
  }

  // corrupted masks, parallel over frames with per-frame streams
  scene.frames.resize(spec.cameras.size());
  parallel_for(spec.cameras.size(), threads, [&](std::size_t f) {
    Rng rng(splitmix64(splitmix64(spec.seed ^ 0x9d3f0e44b1c27a6dull) ^ f));
    Frame& frame = scene.frames[f];
    frame.camera = spec.cameras[f];
    frame.camera.frame_id = static_cast<int>(f);
    frame.depth = raw[f].depth;
    frame.mask = detail::corrupt_mask(raw[f], objects.size(), spec.corruption, rng);
  });

  return scene;
}

/// Write a scene in the formats the pipeline consumes: scene.ply carries the
/// ground-truth `label` property, frames/ the per-view rasters and poses,
/// boxes.json the detections, gt_labels.txt the per-point labels.
inline void export_scene(const SynthScene& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_ply(scene.cloud, (fs::path(dir) / "scene.ply").string(), &scene.cloud.gt_labels);
  save_frames(scene.frames, (fs::path(dir) / "frames").string());
  save_boxes(scene.boxes, (fs::path(dir) / "boxes.json").string());
  save_labels(scene.gt.labels, (fs::path(dir) / "gt_labels.txt").string());
}

/// Regression scene family "room-8": a floor plane plus seven elongated
/// two-tone boxes in distinct colors, ringed by 12 cameras. The elongation
/// keeps the per-frame mask splits aligned with one 3D plane, so corrupted
/// runs over-segment reliably; two-tone paint puts a superpoint boundary at
/// that same plane.
inline SceneSpec make_room8_spec(std::uint64_t seed, bool part_split = false) {
  SceneSpec spec;
  spec.seed = seed;
  spec.room_min = Vec3(-2.2, -2.2, -0.01);
  spec.room_max = Vec3(2.2, 2.2, 2.8);
  spec.points_per_m2 = 2000.0;
  spec.noise.color_sigma = 0.008;
  spec.noise.position_sigma = 0.0025;
  if (part_split) spec.corruption.part_split_prob = 1.0;

  SynthObject floor;
  floor.type = "plane";
  floor.normal_axis = 2;
  floor.center = Vec3(0.0, 0.0, 0.0);
  floor.size = Vec3(4.4, 4.4, 0.0);
  floor.color = floor.color_b = Vec3(0.52, 0.52, 0.55);
  spec.objects.push_back(floor);

  Rng rng(splitmix64(seed ^ 0x726f6f6d38ull));  // layout stream
  const double slot[3] = {-1.35, 0.0, 1.35};
  int placed = 0;
  for (int sy = 0; sy < 3 && placed < 7; ++sy) {
    for (int sx = 0; sx < 3 && placed < 7; ++sx) {
      SynthObject box;
      box.type = "box";
      const bool long_x = rng.uniform() < 0.5;
      const double len = rng.uniform(0.95, 1.2);
      const double wid = rng.uniform(0.26, 0.36);
      const double hgt = rng.uniform(0.32, 0.42);
      box.size = long_x ? Vec3(len, wid, hgt) : Vec3(wid, len, hgt);
      // hover above the floor: a small gap keeps the 8-NN graph from
      // bridging box and floor and makes silhouette depths unambiguous,
      // so contact-line points cannot leak between instances
      box.center = Vec3(slot[sx] + rng.uniform(-0.12, 0.12),
                        slot[sy] + rng.uniform(-0.12, 0.12), hgt / 2.0 + 0.06);
      const double hue = std::fmod(0.11 + placed * 0.6180339887498949, 1.0);
      box.color = hsv_to_rgb(hue, 0.68, 0.82);
      box.color_b = hsv_to_rgb(hue, 0.68, 0.52);
      box.two_tone = true;
      spec.objects.push_back(box);
      ++placed;
    }
  }

  OrbitSpec orbit;
  orbit.count = 12;
  orbit.radius = 4.6;
  orbit.height = 2.7;
  orbit.target = Vec3(0.0, 0.0, 0.5);
  spec.cameras = orbit_cameras(orbit, Vec3(0.0, 0.0, 0.5));
  return spec;
}

/// JSON round trip for scene specs. Cameras may be given explicitly (the
/// frames schema) or as {"orbit": {...}}; orbit descriptors expand at parse
/// time, so to_json always emits explicit poses.
inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("scene spec: expected a JSON object");
  SceneSpec spec;
  std::optional<OrbitSpec> pending_orbit;  // expanded after room bounds are known
  auto vec3 = [](const nlohmann::json& a, const char* what) {
    if (!a.is_array() || a.size() != 3)
      throw std::invalid_argument(std::string("scene spec: ") + what + " must be [x,y,z]");
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") spec.seed = value.get<std::uint64_t>();
    else if (key == "room") {
      spec.room_min = vec3(value.at("min"), "room.min");
      spec.room_max = vec3(value.at("max"), "room.max");
    } else if (key == "points_per_m2") spec.points_per_m2 = value.get<double>();
    else if (key == "objects") {
      for (const auto& jo : value) {
        SynthObject o;
        for (const auto& [ok, ov] : jo.items()) {
          if (ok == "type") o.type = ov.get<std::string>();
          else if (ok == "center") o.center = vec3(ov, "object.center");
          else if (ok == "size") o.size = vec3(ov, "object.size");
          else if (ok == "color") o.color = vec3(ov, "object.color");
          else if (ok == "color_b") { o.color_b = vec3(ov, "object.color_b"); o.two_tone = true; }
          else if (ok == "normal_axis") o.normal_axis = ov.get<int>();
          else throw std::invalid_argument("scene spec: unknown object key '" + ok + "'");
        }
        if (!o.two_tone) o.color_b = o.color;
        spec.objects.push_back(o);
      }
    } else if (key == "cameras") {
      if (value.is_array()) {
        for (const auto& jc : value) spec.cameras.push_back(camera_from_json(jc));
      } else if (value.is_object() && value.contains("orbit")) {
        OrbitSpec orbit;
        for (const auto& [ok, ov] : value.at("orbit").items()) {
          if (ok == "count") orbit.count = ov.get<int>();
          else if (ok == "radius") orbit.radius = ov.get<double>();
          else if (ok == "height") orbit.height = ov.get<double>();
          else if (ok == "width") orbit.width = ov.get<int>();
          else if (ok == "height_px") orbit.height_px = ov.get<int>();
          else if (ok == "fx") orbit.fx = ov.get<double>();
          else if (ok == "fy") orbit.fy = ov.get<double>();
          else if (ok == "cx") orbit.cx = ov.get<double>();
          else if (ok == "cy") orbit.cy = ov.get<double>();
          else if (ok == "target") orbit.target = vec3(ov, "orbit.target");
          else throw std::invalid_argument("scene spec: unknown orbit key '" + ok + "'");
        }
        pending_orbit = orbit;
      } else {
        throw std::invalid_argument("scene spec: cameras must be a list or {\"orbit\": {...}}");
      }
    } else if (key == "mask_corruption") {
      for (const auto& [ok, ov] : value.items()) {
        if (ok == "part_split_prob") spec.corruption.part_split_prob = ov.get<double>();
        else if (ok == "split_axis_policy") spec.corruption.split_axis_policy = ov.get<std::string>();
        else if (ok == "boundary_noise_px") spec.corruption.boundary_noise_px = ov.get<int>();
        else throw std::invalid_argument("scene spec: unknown mask_corruption key '" + ok + "'");
      }
    } else if (key == "noise") {
      for (const auto& [ok, ov] : value.items()) {
        if (ok == "color_sigma") spec.noise.color_sigma = ov.get<double>();
        else if (ok == "position_sigma") spec.noise.position_sigma = ov.get<double>();
        else throw std::invalid_argument("scene spec: unknown noise key '" + ok + "'");
      }
    } else {
      throw std::invalid_argument("scene spec: unknown key '" + key + "'");
    }
  }
  if (pending_orbit) {
    if (!spec.cameras.empty())
      throw std::invalid_argument("scene spec: give either explicit cameras or an orbit, not both");
    spec.cameras = orbit_cameras(*pending_orbit, (spec.room_min + spec.room_max) / 2.0);
  }
  spec.validate();
  return spec;
}

inline nlohmann::json scene_spec_to_json(const SceneSpec& spec) {
  nlohmann::json objects = nlohmann::json::array();
  for (const SynthObject& o : spec.objects) {
    nlohmann::json jo{{"type", o.type},
                      {"center", {o.center.x(), o.center.y(), o.center.z()}},
                      {"size", {o.size.x(), o.size.y(), o.size.z()}},
                      {"color", {o.color.x(), o.color.y(), o.color.z()}}};
    if (o.two_tone) jo["color_b"] = {o.color_b.x(), o.color_b.y(), o.color_b.z()};
    if (o.type == "plane") jo["normal_axis"] = o.normal_axis;
    objects.push_back(jo);
  }
  nlohmann::json cameras = nlohmann::json::array();
  for (const CameraFrame& c : spec.cameras) cameras.push_back(camera_to_json(c));
  return nlohmann::json{
      {"seed", spec.seed},
      {"room",
       {{"min", {spec.room_min.x(), spec.room_min.y(), spec.room_min.z()}},
        {"max", {spec.room_max.x(), spec.room_max.y(), spec.room_max.z()}}}},
      {"points_per_m2", spec.points_per_m2},
      {"objects", objects},
      {"cameras", cameras},
      {"mask_corruption",
       {{"part_split_prob", spec.corruption.part_split_prob},
        {"split_axis_policy", spec.corruption.split_axis_policy},
        {"boundary_noise_px", spec.corruption.boundary_noise_px}}},
      {"noise",
       {{"color_sigma", spec.noise.color_sigma},
        {"position_sigma", spec.noise.position_sigma}}}};
}

}  // namespace instfuse
