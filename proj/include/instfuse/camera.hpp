// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Pinhole camera with a camera-to-world rigid pose (OpenCV axes: x right,
/// y down, z forward). Projection applies the inverse pose.
struct CameraFrame {
  int frame_id = 0;
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Eigen::Matrix4d cam_to_world = Eigen::Matrix4d::Identity();

  Eigen::Matrix4d world_to_cam() const {
    Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
    const Eigen::Matrix3d r = cam_to_world.topLeftCorner<3, 3>();
    const Vec3 t = cam_to_world.topRightCorner<3, 1>();
    inv.topLeftCorner<3, 3>() = r.transpose();
    inv.topRightCorner<3, 1>() = -r.transpose() * t;
    return inv;
  }

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw std::invalid_argument("camera: focal lengths must be positive");
    if (width < 1 || height < 1) throw std::invalid_argument("camera: raster dimensions must be >= 1");
    const Eigen::Matrix3d r = cam_to_world.topLeftCorner<3, 3>();
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-4)
      throw std::invalid_argument("camera: rotation block not orthonormal");
  }
};

/// Per-pixel scene depth in meters, row-major from the top-left; 0 = invalid.
struct DepthRaster {
  int width = 0, height = 0;
  std::vector<double> values;

  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }

  void validate() const {
    if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("depth raster: size mismatch");
    for (double d : values)
      if (!(d >= 0.0) || !std::isfinite(d))
        throw std::invalid_argument("depth raster: values must be finite and >= 0");
  }
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;  // camera-space depth, meters
};

/// Pinhole projection of a world point. Absent when the point lies at or
/// behind the camera plane (z <= 1e-6).
inline std::optional<Projection> project_point(const Vec3& p, const CameraFrame& cam) {
  const Eigen::Matrix4d w2c = cam.world_to_cam();
  const Vec3 pc = w2c.topLeftCorner<3, 3>() * p + w2c.topRightCorner<3, 1>();
  if (pc.z() <= 1e-6) return std::nullopt;
  return Projection{cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy, pc.z()};
}

/// Nearest-pixel coordinate; half-pixel boundaries round up.
inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

/// True iff (u,v) rounds to an in-bounds pixel whose depth is valid and
/// within tol of z.
inline bool visibility_test(double u, double v, double z, const DepthRaster& depth, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("visibility_test: tol must be > 0");
  const int ui = round_half_up(u);
  const int vi = round_half_up(v);
  if (ui < 0 || ui >= depth.width || vi < 0 || vi >= depth.height) return false;
  const double d = depth.at(ui, vi);
  if (!(d > 0.0)) return false;
  return std::abs(z - d) <= tol;
}

struct FootprintEntry {
  int point = 0;
  int u = 0;
  int v = 0;
  bool visible = false;
};

/// Pixel locations of every point that lands inside the frame, in ascending
/// point-id order. Occluded points keep an entry with visible=false;
/// out-of-frustum points are omitted.
struct PixelFootprint {
  int frame_id = 0;
  int width = 0, height = 0;
  std::vector<FootprintEntry> entries;
};

inline PixelFootprint footprint(const PointCloud& cloud, const CameraFrame& cam,
                                const DepthRaster& depth, double tol) {
  if (depth.width != cam.width || depth.height != cam.height)
    throw std::invalid_argument("footprint: depth raster does not match camera dimensions");
  PixelFootprint out;
  out.frame_id = cam.frame_id;
  out.width = cam.width;
  out.height = cam.height;
  out.entries.reserve(cloud.size() / 2);
  const Eigen::Matrix4d w2c = cam.world_to_cam();
  const Eigen::Matrix3d rot = w2c.topLeftCorner<3, 3>();
  const Vec3 trans = w2c.topRightCorner<3, 1>();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 pc = rot * cloud.positions[i] + trans;
    if (pc.z() <= 1e-6) continue;
    const double u = cam.fx * pc.x() / pc.z() + cam.cx;
    const double v = cam.fy * pc.y() / pc.z() + cam.cy;
    const int ui = round_half_up(u);
    const int vi = round_half_up(v);
    if (ui < 0 || ui >= cam.width || vi < 0 || vi >= cam.height) continue;
    const double d = depth.at(ui, vi);
    const bool visible = d > 0.0 && std::abs(pc.z() - d) <= tol;
    out.entries.push_back({static_cast<int>(i), ui, vi, visible});
  }
  return out;
}

}  // namespace instfuse
