// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "instfuse/kdtree.hpp"
#include "instfuse/parallel.hpp"
#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Normal of a PCA plane fit over the given point ids (query included by the
/// caller). Accumulation is done in ascending index order so the result is
/// bitwise identical for any permutation of `ids`. The normal is oriented so
/// its largest-magnitude component is positive (earlier axis wins ties);
/// fully degenerate neighborhoods fall back to (0,0,1).
inline Vec3 normal_from_neighborhood(const std::vector<Vec3>& positions, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  Vec3 mean = Vec3::Zero();
  for (int id : ids) mean += positions[static_cast<std::size_t>(id)];
  mean /= static_cast<double>(ids.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int id : ids) {
    const Vec3 d = positions[static_cast<std::size_t>(id)] - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(ids.size());

  if (cov.cwiseAbs().maxCoeff() < 1e-30) return Vec3(0.0, 0.0, 1.0);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  solver.computeDirect(cov);
  Vec3 n = solver.eigenvectors().col(0);  // smallest eigenvalue
  const double len = n.norm();
  if (!(len > 0.0) || !n.allFinite()) return Vec3(0.0, 0.0, 1.0);
  n /= len;

  int axis = 0;
  double best = std::abs(n[0]);
  for (int k = 1; k < 3; ++k) {
    if (std::abs(n[k]) > best) {
      best = std::abs(n[k]);
      axis = k;
    }
  }
  if (n[axis] < 0.0) n = -n;
  return n;
}

/// Per-point PCA normals over the k nearest neighbors (query point included
/// in the covariance). Positions and colors pass through untouched; output
/// does not depend on the worker count.
inline PointCloud estimate_normals(const PointCloud& cloud, int k, unsigned threads = 1) {
  const int n = static_cast<int>(cloud.size());
  if (k < 3) throw std::invalid_argument("estimate_normals: k must be >= 3");
  if (k >= n) throw std::invalid_argument("estimate_normals: k must be < N");

  KdTree index(cloud.positions);
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vec3::Zero());

  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    std::vector<int> ids = index.knn(static_cast<int>(i), k);
    ids.push_back(static_cast<int>(i));
    out.normals[i] = normal_from_neighborhood(cloud.positions, std::move(ids));
  });
  return out;
}

}  // namespace instfuse
