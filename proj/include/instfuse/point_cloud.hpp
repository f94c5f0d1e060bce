// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace instfuse {

using Vec3 = Eigen::Vector3d;

/// Colored point cloud in world coordinates. Colors are per-channel in
/// [0,1]; normals, when present, are unit length. `gt_labels` carries the
/// optional per-point instance annotation loaded from PLY (-1 = unlabeled).
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;     // empty until estimated
  std::vector<int> gt_labels;    // empty when the input carries no labels

  std::size_t size() const { return positions.size(); }
  bool has_normals() const { return normals.size() == positions.size() && !normals.empty(); }
  bool has_gt_labels() const { return gt_labels.size() == positions.size() && !gt_labels.empty(); }

  void validate() const {
    if (positions.empty()) throw std::invalid_argument("point cloud: empty cloud");
    if (colors.size() != positions.size())
      throw std::invalid_argument("point cloud: positions/colors length mismatch");
    for (const Vec3& c : colors)
      for (int k = 0; k < 3; ++k)
        if (!(c[k] >= 0.0 && c[k] <= 1.0))
          throw std::invalid_argument("point cloud: color channel outside [0,1]");
    if (!normals.empty()) {
      if (normals.size() != positions.size())
        throw std::invalid_argument("point cloud: normals length mismatch");
      for (const Vec3& n : normals) {
        const double len = n.norm();
        if (len < 1.0 - 1e-6 || len > 1.0 + 1e-6)
          throw std::invalid_argument("point cloud: normal not unit length");
      }
    }
    if (!gt_labels.empty() && gt_labels.size() != positions.size())
      throw std::invalid_argument("point cloud: label length mismatch");
  }
};

/// Disjoint labeling of points into segments/instances. Assigned labels form
/// the contiguous range 0..num_segments-1; -1 marks unassigned points.
struct Partition {
  std::vector<int> labels;
  int num_segments = 0;

  std::size_t size() const { return labels.size(); }

  void validate() const {
    std::vector<char> seen(static_cast<std::size_t>(std::max(num_segments, 0)), 0);
    for (int l : labels) {
      if (l < -1 || l >= num_segments)
        throw std::invalid_argument("partition: label " + std::to_string(l) + " out of range");
      if (l >= 0) seen[static_cast<std::size_t>(l)] = 1;
    }
    for (int s = 0; s < num_segments; ++s)
      if (!seen[static_cast<std::size_t>(s)])
        throw std::invalid_argument("partition: empty segment " + std::to_string(s));
  }
};

/// Renumber arbitrary (possibly sparse) labels so ids appear in order of
/// first occurrence over the point index; -1 passes through unchanged.
inline Partition renumber_by_first_occurrence(const std::vector<int>& raw) {
  Partition out;
  out.labels.resize(raw.size(), -1);
  std::unordered_map<int, int> lookup;
  lookup.reserve(64);
  int next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) continue;
    auto it = lookup.find(raw[i]);
    if (it == lookup.end()) it = lookup.emplace(raw[i], next++).first;
    out.labels[i] = it->second;
  }
  out.num_segments = next;
  return out;
}

}  // namespace instfuse
