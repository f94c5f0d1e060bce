// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Undirected weighted edge, stored with a < b.
struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// Canonical edge order: ascending (weight, min id, max id).
inline bool edge_less(const WeightedEdge& x, const WeightedEdge& y) {
  if (x.weight != y.weight) return x.weight < y.weight;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
    for (int i = 0; i < n; ++i) parent_[static_cast<std::size_t>(i)] = i;
  }

  int find(int x) {
    int root = x;
    while (parent_[static_cast<std::size_t>(root)] != root) root = parent_[static_cast<std::size_t>(root)];
    while (parent_[static_cast<std::size_t>(x)] != root) {
      int next = parent_[static_cast<std::size_t>(x)];
      parent_[static_cast<std::size_t>(x)] = root;
      x = next;
    }
    return root;
  }

  int unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    return a;
  }

  int size(int x) { return size_[static_cast<std::size_t>(find(x))]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

struct SegmentationParams {
  double scale = 0.06;       // threshold-function scale
  int min_segment_size = 1;  // smaller components are merged in a post-pass
};

/// Graph-cut over-segmentation (Felzenszwalb-Huttenlocher).
///
/// Edges must already be in canonical ascending order. Components a, b merge
/// at edge w iff w <= min(Int(a) + scale/|a|, Int(b) + scale/|b|), where
/// Int(C) is the largest merged edge weight inside C (0 for singletons). A
/// second sweep in the same edge order then absorbs any component below
/// min_segment_size into the neighbor across its lowest-weight edge. Labels
/// are renumbered by first occurrence over the point index.
inline Partition segment_graph(const std::vector<WeightedEdge>& edges, int n,
                               const SegmentationParams& params) {
  if (n <= 0) throw std::invalid_argument("segment_graph: n must be positive");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edge_less(edges[i], edges[i - 1]))
      throw std::invalid_argument("segment_graph: edge list not in canonical order");
  for (const WeightedEdge& e : edges)
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n)
      throw std::invalid_argument("segment_graph: edge endpoint out of range");

  UnionFind uf(n);
  std::vector<double> internal(static_cast<std::size_t>(n), 0.0);  // Int(C), indexed by root

  for (const WeightedEdge& e : edges) {
    const int ra = uf.find(e.a);
    const int rb = uf.find(e.b);
    if (ra == rb) continue;
    const double ta = internal[static_cast<std::size_t>(ra)] + params.scale / uf.size(ra);
    const double tb = internal[static_cast<std::size_t>(rb)] + params.scale / uf.size(rb);
    if (e.weight <= std::min(ta, tb)) {
      const int root = uf.unite(ra, rb);
      internal[static_cast<std::size_t>(root)] =
          std::max({internal[static_cast<std::size_t>(ra)], internal[static_cast<std::size_t>(rb)], e.weight});
    }
  }

  if (params.min_segment_size > 1) {
    for (const WeightedEdge& e : edges) {
      const int ra = uf.find(e.a);
      const int rb = uf.find(e.b);
      if (ra == rb) continue;
      if (uf.size(ra) < params.min_segment_size || uf.size(rb) < params.min_segment_size)
        uf.unite(ra, rb);
    }
  }

  std::vector<int> roots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = uf.find(i);
  return renumber_by_first_occurrence(roots);
}

}  // namespace instfuse
