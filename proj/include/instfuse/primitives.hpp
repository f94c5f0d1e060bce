// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "instfuse/graph_segmentation.hpp"
#include "instfuse/kdtree.hpp"
#include "instfuse/normals.hpp"
#include "instfuse/parallel.hpp"
#include "instfuse/point_cloud.hpp"

namespace instfuse {

struct PrimitiveConfig {
  double w_n = 0.96;          // weight of the normal dissimilarity term
  double w_c = 0.04;          // weight of the color dissimilarity term
  double fzs_k = 0.06;        // segmentation threshold-function scale
  int min_segment_size = 20;  // point-count floor per primitive
  int graph_knn = 8;          // neighbors per point when building edges

  void validate() const {
    if (w_n < 0.0 || w_c < 0.0 || !(w_n + w_c > 0.0))
      throw std::invalid_argument("primitive config: weights must be >= 0 with a positive sum");
    if (!(fzs_k > 0.0)) throw std::invalid_argument("primitive config: fzs_k must be > 0");
    if (min_segment_size < 1) throw std::invalid_argument("primitive config: min_segment_size must be >= 1");
    if (graph_knn < 1) throw std::invalid_argument("primitive config: graph_knn must be >= 1");
  }
};

/// Combined dissimilarity between two points: the normal term maps cosine
/// similarity into [0,1] via (1 - cos)/2, the color term is the Euclidean
/// color distance normalized by sqrt(3). Higher = more dissimilar.
inline double edge_weight(const Vec3& n_a, const Vec3& n_b, const Vec3& c_a, const Vec3& c_b,
                          const PrimitiveConfig& cfg) {
  const double cosine = n_a.dot(n_b);
  const double normal_term = 0.5 * (1.0 - cosine);
  const double color_term = (c_a - c_b).norm() / std::sqrt(3.0);
  return cfg.w_n * normal_term + cfg.w_c * color_term;
}

/// k-NN graph over the cloud with edge_weight weights, deduplicated and in
/// canonical ascending (weight, min id, max id) order.
inline std::vector<WeightedEdge> build_primitive_graph(const PointCloud& cloud,
                                                       const PrimitiveConfig& cfg,
                                                       unsigned threads = 1) {
  cfg.validate();
  if (!cloud.has_normals()) throw std::invalid_argument("build_primitive_graph: normals absent");

  const int n = static_cast<int>(cloud.size());
  const int k = std::min(cfg.graph_knn, n - 1);
  if (k < 1) return {};

  KdTree index(cloud.positions);
  std::vector<std::vector<int>> neighbor_lists(cloud.size());
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    neighbor_lists[i] = index.knn(static_cast<int>(i), k);
  });

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(cloud.size() * static_cast<std::size_t>(k));
  for (int a = 0; a < n; ++a)
    for (int b : neighbor_lists[static_cast<std::size_t>(a)])
      pairs.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<WeightedEdge> edges(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto [a, b] = pairs[i];
    edges[i] = {a, b,
                edge_weight(cloud.normals[static_cast<std::size_t>(a)],
                            cloud.normals[static_cast<std::size_t>(b)],
                            cloud.colors[static_cast<std::size_t>(a)],
                            cloud.colors[static_cast<std::size_t>(b)], cfg)};
  });
  std::sort(edges.begin(), edges.end(), edge_less);
  return edges;
}

/// Over-segmentation into superpoint primitives: k-NN graph construction
/// followed by the graph-cut sweep. Normals are estimated on the fly when the
/// cloud lacks them.
inline Partition compute_primitives(const PointCloud& cloud, const PrimitiveConfig& cfg,
                                    int normal_knn = 30, unsigned threads = 1) {
  cfg.validate();
  const PointCloud* input = &cloud;
  PointCloud with_normals;
  if (!cloud.has_normals()) {
    with_normals = estimate_normals(cloud, normal_knn, threads);
    input = &with_normals;
  }
  const std::vector<WeightedEdge> edges = build_primitive_graph(*input, cfg, threads);
  return segment_graph(edges, static_cast<int>(cloud.size()),
                       SegmentationParams{cfg.fzs_k, cfg.min_segment_size});
}

}  // namespace instfuse
