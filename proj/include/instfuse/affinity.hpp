// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "instfuse/camera.hpp"
#include "instfuse/parallel.hpp"
#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Per-pixel 2D mask ids, row-major from the top-left; 0 = unlabeled.
struct MaskRaster {
  int width = 0, height = 0;
  std::vector<std::uint16_t> ids;

  std::uint16_t at(int u, int v) const { return ids[static_cast<std::size_t>(v) * width + u]; }
  std::uint16_t& at(int u, int v) { return ids[static_cast<std::size_t>(v) * width + u]; }

  void validate() const {
    if (ids.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("mask raster: size mismatch");
  }
};

/// One frame of posed 2D evidence.
struct Frame {
  CameraFrame camera;
  DepthRaster depth;
  MaskRaster mask;
};

using FrameSet = std::vector<Frame>;

/// Sparse (mask id, point count) pairs, ascending by id; id 0 never appears.
using SparseHist = std::vector<std::pair<int, int>>;

inline void hist_add(SparseHist& h, int id, int count = 1) {
  auto it = std::lower_bound(h.begin(), h.end(), id,
                             [](const std::pair<int, int>& e, int key) { return e.first < key; });
  if (it != h.end() && it->first == id) {
    it->second += count;
  } else {
    h.insert(it, {id, count});
  }
}

/// Cosine similarity of two sparse count vectors; counts are nonnegative so
/// the result lies in [0,1]. Returns -1 when either vector is empty.
inline double hist_cosine(const SparseHist& a, const SparseHist& b) {
  if (a.empty() || b.empty()) return -1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      dot += static_cast<double>(a[i].second) * b[j].second;
      ++i;
      ++j;
    } else if (a[i].first < b[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  for (const auto& e : a) na += static_cast<double>(e.second) * e.second;
  for (const auto& e : b) nb += static_cast<double>(e.second) * e.second;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, 0.0, 1.0);
}

/// Which 2D masks a superpoint's visible points land in, in one frame.
/// `visibility` is the fraction of the superpoint's points that pass the
/// frustum + depth tests; hits on unlabeled pixels count toward visibility
/// but not toward the histogram.
struct FrameHistogram {
  int superpoint = 0;
  int frame_id = 0;
  SparseHist counts;
  int visible_points = 0;
  double visibility = 0.0;
};

inline std::vector<FrameHistogram> frame_histograms(const PixelFootprint& fp,
                                                    const MaskRaster& masks,
                                                    const Partition& partition) {
  if (masks.width != fp.width || masks.height != fp.height)
    throw std::invalid_argument("frame_histograms: mask raster does not match footprint frame");
  std::vector<int> sizes(static_cast<std::size_t>(partition.num_segments), 0);
  for (int l : partition.labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];

  std::vector<FrameHistogram> out(static_cast<std::size_t>(partition.num_segments));
  for (int s = 0; s < partition.num_segments; ++s) {
    out[static_cast<std::size_t>(s)].superpoint = s;
    out[static_cast<std::size_t>(s)].frame_id = fp.frame_id;
  }
  for (const FootprintEntry& e : fp.entries) {
    if (e.point < 0 || static_cast<std::size_t>(e.point) >= partition.labels.size())
      throw std::invalid_argument("frame_histograms: footprint references point outside partition");
    if (!e.visible) continue;
    const int s = partition.labels[static_cast<std::size_t>(e.point)];
    if (s < 0) continue;
    FrameHistogram& h = out[static_cast<std::size_t>(s)];
    ++h.visible_points;
    const int id = masks.at(e.u, e.v);
    if (id > 0) hist_add(h.counts, id);
  }
  for (int s = 0; s < partition.num_segments; ++s) {
    FrameHistogram& h = out[static_cast<std::size_t>(s)];
    h.visibility = sizes[static_cast<std::size_t>(s)] > 0
                       ? static_cast<double>(h.visible_points) / sizes[static_cast<std::size_t>(s)]
                       : 0.0;
  }
  return out;
}

/// Single-frame affinity between two superpoints: cosine of their mask
/// histograms. Absent when either superpoint saw no mask in this frame.
inline std::optional<double> frame_affinity(const FrameHistogram& h_i, const FrameHistogram& h_j) {
  if (h_i.frame_id != h_j.frame_id)
    throw std::invalid_argument("frame_affinity: histograms from different frames");
  const double c = hist_cosine(h_i.counts, h_j.counts);
  if (c < 0.0) return std::nullopt;
  return c;
}

struct PerFrameAffinity {
  double affinity = 0.0;  // A^m in [0,1]
  double vis_i = 0.0;
  double vis_j = 0.0;
};

/// Visibility-weighted mean of per-frame affinities; frames whose weight
/// gamma = vis_i * vis_j falls below min_gamma are dropped. Absent when no
/// frame survives.
inline std::optional<double> aggregate_affinity(const std::vector<PerFrameAffinity>& per_frame,
                                                double min_gamma = 1e-4) {
  double num = 0.0, den = 0.0;
  for (const PerFrameAffinity& f : per_frame) {
    const double gamma = f.vis_i * f.vis_j;
    if (gamma < min_gamma) continue;
    num += gamma * f.affinity;
    den += gamma;
  }
  if (den <= 0.0) return std::nullopt;
  return num / den;
}

/// Superpoint graph: nodes carry centroid/size/membership plus the per-frame
/// mask evidence needed to re-derive affinities for merged clusters; edges
/// live in the symmetric adjacency matrix (-1 = no co-visible frame).
struct AffinityGraph {
  int num_superpoints = 0;
  std::vector<double> adjacency;  // row-major N x N, -1 sentinel off evidence
  std::vector<Vec3> centroids;
  std::vector<int> sizes;
  std::vector<std::vector<int>> members;

  std::vector<int> frame_ids;                   // ascending
  std::vector<std::vector<SparseHist>> hists;   // [frame][superpoint]
  std::vector<std::vector<int>> visible_counts; // [frame][superpoint]

  double at(int i, int j) const {
    return adjacency[static_cast<std::size_t>(i) * num_superpoints + j];
  }
};

struct AffinityParams {
  double depth_tolerance_m = 0.05;
  double min_gamma = 1e-4;
  unsigned threads = 1;
};

inline AffinityGraph build_affinity_graph(const PointCloud& cloud, const Partition& partition,
                                          const FrameSet& frames, const AffinityParams& params) {
  if (frames.empty()) throw std::invalid_argument("build_affinity_graph: empty frame set");
  if (partition.labels.size() != cloud.size())
    throw std::invalid_argument("build_affinity_graph: partition length mismatch");
  for (int l : partition.labels)
    if (l < 0) throw std::invalid_argument("build_affinity_graph: partition has unassigned points");

  const int n = partition.num_segments;
  AffinityGraph g;
  g.num_superpoints = n;
  g.sizes.assign(static_cast<std::size_t>(n), 0);
  g.centroids.assign(static_cast<std::size_t>(n), Vec3::Zero());
  g.members.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int s = partition.labels[i];
    ++g.sizes[static_cast<std::size_t>(s)];
    g.centroids[static_cast<std::size_t>(s)] += cloud.positions[i];
    g.members[static_cast<std::size_t>(s)].push_back(static_cast<int>(i));
  }
  for (int s = 0; s < n; ++s) g.centroids[static_cast<std::size_t>(s)] /= g.sizes[static_cast<std::size_t>(s)];

  // frames sorted by id so the weighted reduction has one canonical order
  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].camera.frame_id < frames[b].camera.frame_id;
  });

  const std::size_t nf = frames.size();
  g.frame_ids.resize(nf);
  g.hists.assign(nf, {});
  g.visible_counts.assign(nf, {});
  parallel_for(nf, params.threads, [&](std::size_t fi) {
    const Frame& fr = frames[order[fi]];
    fr.camera.validate();
    if (fr.mask.width != fr.camera.width || fr.mask.height != fr.camera.height)
      throw std::invalid_argument("build_affinity_graph: mask raster does not match camera dimensions");
    const PixelFootprint fp = footprint(cloud, fr.camera, fr.depth, params.depth_tolerance_m);
    const std::vector<FrameHistogram> hs = frame_histograms(fp, fr.mask, partition);
    g.frame_ids[fi] = fr.camera.frame_id;
    g.hists[fi].resize(static_cast<std::size_t>(n));
    g.visible_counts[fi].assign(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
      g.hists[fi][static_cast<std::size_t>(s)] = hs[static_cast<std::size_t>(s)].counts;
      g.visible_counts[fi][static_cast<std::size_t>(s)] = hs[static_cast<std::size_t>(s)].visible_points;
    }
  });

  std::vector<std::vector<int>> with_masks(nf);  // superpoints carrying evidence, per frame
  for (std::size_t f = 0; f < nf; ++f)
    for (int s = 0; s < n; ++s)
      if (!g.hists[f][static_cast<std::size_t>(s)].empty()) with_masks[f].push_back(s);

  g.adjacency.assign(static_cast<std::size_t>(n) * n, -1.0);
  parallel_for(static_cast<std::size_t>(n), params.threads, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    std::vector<double> num(static_cast<std::size_t>(n), 0.0);
    std::vector<double> den(static_cast<std::size_t>(n), 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
      const SparseHist& hi = g.hists[f][row];
      if (hi.empty()) continue;
      const double vis_i =
          static_cast<double>(g.visible_counts[f][row]) / g.sizes[row];
      for (int j : with_masks[f]) {
        if (j <= i) continue;
        const double vis_j =
            static_cast<double>(g.visible_counts[f][static_cast<std::size_t>(j)]) / g.sizes[static_cast<std::size_t>(j)];
        const double gamma = vis_i * vis_j;
        if (gamma < params.min_gamma) continue;
        num[static_cast<std::size_t>(j)] += gamma * hist_cosine(hi, g.hists[f][static_cast<std::size_t>(j)]);
        den[static_cast<std::size_t>(j)] += gamma;
      }
    }
    for (int j = i + 1; j < n; ++j)
      if (den[static_cast<std::size_t>(j)] > 0.0)
        g.adjacency[row * static_cast<std::size_t>(n) + j] =
            num[static_cast<std::size_t>(j)] / den[static_cast<std::size_t>(j)];
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.adjacency[static_cast<std::size_t>(j) * n + i] = g.adjacency[static_cast<std::size_t>(i) * n + j];

  return g;
}

}  // namespace instfuse
