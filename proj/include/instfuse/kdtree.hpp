// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Exact k-nearest-neighbor index over point positions.
///
/// Queries return min(k, N-1) indices excluding the query point itself,
/// ordered by ascending squared distance with ties broken by ascending
/// point index — identical to an exhaustive distance sort.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) throw std::invalid_argument("kdtree: empty point set");
    std::vector<int> order(points_.size());
    std::iota(order.begin(), order.end(), 0);
    nodes_.reserve(points_.size());
    root_ = build(order, 0, static_cast<int>(order.size()));
  }

  std::size_t size() const { return points_.size(); }

  /// k nearest neighbors of point `query_id` (self excluded).
  std::vector<int> knn(int query_id, int k) const {
    const int n = static_cast<int>(points_.size());
    if (query_id < 0 || query_id >= n)
      throw std::out_of_range("kdtree: query id out of range");
    if (k < 1 || k > n - 1)
      throw std::invalid_argument("kdtree: k must satisfy 1 <= k <= N-1");
    return knn_position(points_[static_cast<std::size_t>(query_id)], k, query_id);
  }

  /// k nearest neighbors of an arbitrary position; `exclude` may name a point
  /// id to skip (-1 = none).
  std::vector<int> knn_position(const Vec3& q, int k, int exclude = -1) const {
    Heap heap(k);
    search(root_, q, exclude, heap);
    return heap.sorted_indices();
  }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  // Bounded worst-out candidate set: keeps the k best (d2, idx) pairs under
  // the (ascending d2, ascending idx) order.
  class Heap {
   public:
    explicit Heap(int k) : k_(static_cast<std::size_t>(k)) { entries_.reserve(k_ + 1); }

    bool full() const { return entries_.size() == k_; }
    double worst_d2() const { return entries_.front().first; }

    void offer(double d2, int idx) {
      if (full()) {
        const auto& w = entries_.front();
        if (d2 > w.first || (d2 == w.first && idx > w.second)) return;
        std::pop_heap(entries_.begin(), entries_.end(), cmp);
        entries_.back() = {d2, idx};
        std::push_heap(entries_.begin(), entries_.end(), cmp);
      } else {
        entries_.emplace_back(d2, idx);
        std::push_heap(entries_.begin(), entries_.end(), cmp);
      }
    }

    std::vector<int> sorted_indices() {
      std::sort(entries_.begin(), entries_.end());
      std::vector<int> out;
      out.reserve(entries_.size());
      for (const auto& e : entries_) out.push_back(e.second);
      return out;
    }

   private:
    // max-heap on (d2, idx): top is the current worst candidate
    static bool cmp(const std::pair<double, int>& a, const std::pair<double, int>& b) {
      return a < b;
    }
    std::size_t k_;
    std::vector<std::pair<double, int>> entries_;
  };

  int build(std::vector<int>& order, int begin, int end) {
    if (begin >= end) return -1;
    // split on the widest extent for balanced cells on anisotropic data
    Vec3 lo = points_[static_cast<std::size_t>(order[static_cast<std::size_t>(begin)])];
    Vec3 hi = lo;
    for (int i = begin; i < end; ++i) {
      const Vec3& p = points_[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](int a, int b) {
                       const double ca = points_[static_cast<std::size_t>(a)][axis];
                       const double cb = points_[static_cast<std::size_t>(b)][axis];
                       return ca < cb || (ca == cb && a < b);
                     });

    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_[static_cast<std::size_t>(self)].point = order[static_cast<std::size_t>(mid)];
    nodes_[static_cast<std::size_t>(self)].axis = axis;
    const int l = build(order, begin, mid);
    const int r = build(order, mid + 1, end);
    nodes_[static_cast<std::size_t>(self)].left = l;
    nodes_[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  void search(int node_id, const Vec3& q, int exclude, Heap& heap) const {
    if (node_id < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    const Vec3& p = points_[static_cast<std::size_t>(node.point)];
    if (node.point != exclude) heap.offer((p - q).squaredNorm(), node.point);

    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, exclude, heap);
    // ties on the plane distance must still be explored: an equal-distance
    // point with a lower index may live on the far side
    if (!heap.full() || delta * delta <= heap.worst_d2()) search(far, q, exclude, heap);
  }

  std::vector<Vec3> points_;  // owned copy: the index must not dangle
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace instfuse
