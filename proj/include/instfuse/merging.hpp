// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "instfuse/affinity.hpp"
#include "instfuse/point_cloud.hpp"

namespace instfuse {

struct MergeConfig {
  std::vector<double> delta1_schedule = {0.9, 0.8, 0.7, 0.6, 0.5};
  double delta2 = 0.75;
  double distance_floor = 1.0;
  bool ascending_boxes = true;
  bool exclusion_after_claim = true;

  void validate() const {
    if (delta1_schedule.empty())
      throw std::invalid_argument("merge config: empty threshold schedule");
    for (std::size_t i = 0; i < delta1_schedule.size(); ++i) {
      if (!(delta1_schedule[i] > 0.0 && delta1_schedule[i] <= 1.0))
        throw std::invalid_argument("merge config: thresholds must lie in (0,1]");
      if (i > 0 && delta1_schedule[i] >= delta1_schedule[i - 1])
        throw std::invalid_argument("merge config: thresholds must strictly decrease");
    }
    if (!(delta2 > 0.0 && delta2 < 1.0))
      throw std::invalid_argument("merge config: delta2 must lie in (0,1)");
    if (!(distance_floor > 0.0))
      throw std::invalid_argument("merge config: distance floor must be positive");
  }
};

/// Confidence that two clusters belong to one instance: affinity discounted
/// by centroid distance, with the denominator clamped from below so nearby
/// clusters are not artificially inflated.
inline double merge_confidence(double affinity, double distance_m, double distance_floor) {
  return affinity / std::max(distance_m, distance_floor);
}

struct MergeAudit {
  struct Merge {
    int pass = 0;             // index into the threshold schedule
    double threshold = 0.0;
    int into = 0;             // surviving cluster slot
    int from = 0;             // absorbed cluster slot
    double confidence = 0.0;
  };
  std::vector<Merge> merges;
  std::vector<int> per_pass_counts;
};

namespace detail {

/// Mutable cluster state for region growing. Clusters live in the slots of
/// the original superpoints; a merge keeps the smaller slot index.
struct GrowState {
  const AffinityGraph* graph = nullptr;
  double min_gamma = 1e-4;
  int n = 0;
  std::vector<char> alive;
  std::vector<long long> size_points;
  std::vector<Vec3> centroid_sum;                 // point-weighted position sums
  std::vector<std::vector<SparseHist>> hists;     // [slot][frame]
  std::vector<std::vector<long long>> vis;        // [slot][frame]
  std::vector<double> affinity;                   // row-major n x n, -1 sentinel
  std::vector<int> owner;                         // superpoint -> cluster slot

  explicit GrowState(const AffinityGraph& g, double min_gamma_in)
      : graph(&g), min_gamma(min_gamma_in), n(g.num_superpoints) {
    alive.assign(static_cast<std::size_t>(n), 1);
    size_points.resize(static_cast<std::size_t>(n));
    centroid_sum.resize(static_cast<std::size_t>(n));
    hists.resize(static_cast<std::size_t>(n));
    vis.resize(static_cast<std::size_t>(n));
    owner.resize(static_cast<std::size_t>(n));
    const std::size_t nf = g.frame_ids.size();
    for (int s = 0; s < n; ++s) {
      const auto si = static_cast<std::size_t>(s);
      size_points[si] = g.sizes[si];
      centroid_sum[si] = g.centroids[si] * static_cast<double>(g.sizes[si]);
      owner[si] = s;
      hists[si].resize(nf);
      vis[si].assign(nf, 0);
      for (std::size_t f = 0; f < nf; ++f) {
        hists[si][f] = g.hists[f][si];
        vis[si][f] = g.visible_counts[f][si];
      }
    }
    affinity = g.adjacency;
  }

  Vec3 centroid(int s) const {
    return centroid_sum[static_cast<std::size_t>(s)] / static_cast<double>(size_points[static_cast<std::size_t>(s)]);
  }

  double aff(int i, int j) const {
    return affinity[static_cast<std::size_t>(i) * n + j];
  }

  double confidence(int i, int j, double floor) const {
    const double a = aff(i, j);
    if (a < 0.0) return -1.0;
    return merge_confidence(a, (centroid(i) - centroid(j)).norm(), floor);
  }

  /// Visibility-weighted affinity between two cluster slots, re-derived from
  /// the merged per-frame evidence.
  double recompute_affinity(int i, int j) const {
    const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < graph->frame_ids.size(); ++f) {
      const SparseHist& hi = hists[si][f];
      const SparseHist& hj = hists[sj][f];
      if (hi.empty() || hj.empty()) continue;
      const double vis_i = static_cast<double>(vis[si][f]) / size_points[si];
      const double vis_j = static_cast<double>(vis[sj][f]) / size_points[sj];
      const double gamma = vis_i * vis_j;
      if (gamma < min_gamma) continue;
      num += gamma * hist_cosine(hi, hj);
      den += gamma;
    }
    return den > 0.0 ? num / den : -1.0;
  }

  /// Absorb slot `from` into slot `into` and refresh affinities of `into`
  /// against every other live cluster.
  void merge(int into, int from) {
    const auto si = static_cast<std::size_t>(into), sf = static_cast<std::size_t>(from);
    size_points[si] += size_points[sf];
    centroid_sum[si] += centroid_sum[sf];
    for (std::size_t f = 0; f < graph->frame_ids.size(); ++f) {
      for (const auto& [id, count] : hists[sf][f]) hist_add(hists[si][f], id, count);
      vis[si][f] += vis[sf][f];
    }
    for (int s = 0; s < n; ++s)
      if (owner[static_cast<std::size_t>(s)] == from) owner[static_cast<std::size_t>(s)] = into;
    alive[sf] = 0;
    hists[sf].clear();
    vis[sf].clear();
    for (int k = 0; k < n; ++k) {
      if (!alive[static_cast<std::size_t>(k)] || k == into) continue;
      const double a = recompute_affinity(into, k);
      affinity[si * n + k] = a;
      affinity[static_cast<std::size_t>(k) * n + into] = a;
    }
  }
};

}  // namespace detail

/// Grow instances from the superpoint graph: one pass per confidence
/// threshold, each pass repeatedly merging the currently most confident live
/// pair (ties broken toward the lexicographically smallest slot pair) until
/// no pair reaches the pass threshold. Returns per-point instance labels
/// renumbered by first occurrence.
inline Partition region_grow(const AffinityGraph& graph, const Partition& superpoints,
                             const MergeConfig& cfg, double min_gamma = 1e-4,
                             MergeAudit* audit = nullptr) {
  cfg.validate();
  if (graph.num_superpoints <= 0)
    throw std::invalid_argument("region_grow: empty affinity graph");

  detail::GrowState st(graph, min_gamma);
  const int n = st.n;

  // best live partner per cluster slot: (confidence, partner)
  std::vector<std::pair<double, int>> best(static_cast<std::size_t>(n), {-1.0, -1});
  auto rescan = [&](int i) {
    double bc = -1.0;
    int bj = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i || !st.alive[static_cast<std::size_t>(j)]) continue;
      const double c = st.confidence(i, j, cfg.distance_floor);
      if (c > bc) {
        bc = c;
        bj = j;
      }
    }
    best[static_cast<std::size_t>(i)] = {bc, bj};
  };

  if (audit != nullptr) {
    audit->merges.clear();
    audit->per_pass_counts.assign(cfg.delta1_schedule.size(), 0);
  }

  for (std::size_t pass = 0; pass < cfg.delta1_schedule.size(); ++pass) {
    const double threshold = cfg.delta1_schedule[pass];
    for (int i = 0; i < n; ++i)
      if (st.alive[static_cast<std::size_t>(i)]) rescan(i);

    for (;;) {
      double bc = -1.0;
      int bi = -1, bj = -1;
      for (int i = 0; i < n; ++i) {
        if (!st.alive[static_cast<std::size_t>(i)]) continue;
        const auto& [c, j] = best[static_cast<std::size_t>(i)];
        if (j < 0) continue;
        const int lo = std::min(i, j), hi = std::max(i, j);
        if (c > bc || (c == bc && (lo < bi || (lo == bi && hi < bj)))) {
          bc = c;
          bi = lo;
          bj = hi;
        }
      }
      if (bi < 0 || bc < threshold) break;

      st.merge(bi, bj);
      if (audit != nullptr) {
        audit->merges.push_back({static_cast<int>(pass), threshold, bi, bj, bc});
        ++audit->per_pass_counts[pass];
      }
      rescan(bi);
      for (int k = 0; k < n; ++k) {
        if (!st.alive[static_cast<std::size_t>(k)] || k == bi) continue;
        auto& [c, j] = best[static_cast<std::size_t>(k)];
        if (j == bi || j == bj) {
          rescan(k);
        } else {
          const double c_new = st.confidence(k, bi, cfg.distance_floor);
          if (c_new > c || (c_new == c && bi < j)) best[static_cast<std::size_t>(k)] = {c_new, bi};
        }
      }
    }
  }

  if (superpoints.labels.empty())
    throw std::invalid_argument("region_grow: empty superpoint partition");
  std::vector<int> raw(superpoints.labels.size());
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const int s = superpoints.labels[p];
    if (s < 0 || s >= n)
      throw std::invalid_argument("region_grow: superpoint label out of range");
    raw[p] = st.owner[static_cast<std::size_t>(s)];
  }
  return renumber_by_first_occurrence(raw);
}

/// Axis-aligned 3D detection box.
struct Box3D {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  void validate() const {
    for (int a = 0; a < 3; ++a)
      if (!(max[a] > min[a])) throw std::invalid_argument("box: degenerate extent");
  }
  double volume() const { return (max - min).prod(); }
  bool contains(const Vec3& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y() &&
           p.z() >= min.z() && p.z() <= max.z();
  }
};

struct RefineAudit {
  struct BoxClaim {
    int box_rank = 0;         // position in the processing order
    int box_input_index = 0;  // position in the caller's box list
    std::vector<int> claimed_ids;
    std::vector<double> overlap_fractions;  // one per claimed id
    int new_label = 0;
  };
  std::vector<BoxClaim> claims;
};

/// Second-stage cleanup: each detection box (smallest first by default)
/// claims every instance that lies mostly inside it, relabeling all claimed
/// instances in one box to a single fresh id — merging fragments and, when a
/// box covers several grown instances, fusing them. With
/// exclusion_after_claim, an instance created by an earlier box's claim is
/// immune to later boxes, so small objects swallowed by a loose larger box
/// keep their identity.
inline Partition refine_with_boxes(const Partition& labels, const PointCloud& cloud,
                                   const std::vector<Box3D>& boxes, const MergeConfig& cfg,
                                   RefineAudit* audit = nullptr) {
  cfg.validate();
  if (labels.labels.size() != cloud.size())
    throw std::invalid_argument("refine_with_boxes: label/cloud length mismatch");
  if (audit != nullptr) audit->claims.clear();
  if (boxes.empty()) {
    return renumber_by_first_occurrence(labels.labels);
  }
  for (const Box3D& b : boxes) b.validate();

  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double va = boxes[static_cast<std::size_t>(a)].volume();
    const double vb = boxes[static_cast<std::size_t>(b)].volume();
    return cfg.ascending_boxes ? va < vb : va > vb;
  });

  std::vector<int> current = labels.labels;
  std::map<int, long long> totals;
  int next_label = 0;
  for (int l : current) {
    if (l < 0) continue;
    ++totals[l];
    next_label = std::max(next_label, l + 1);
  }
  std::unordered_set<int> immune;

  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Box3D& box = boxes[static_cast<std::size_t>(order[rank])];
    std::map<int, long long> inside;
    for (std::size_t p = 0; p < cloud.size(); ++p) {
      const int l = current[p];
      if (l < 0) continue;
      if (box.contains(cloud.positions[p])) ++inside[l];
    }

    std::vector<int> claimed;
    std::vector<double> fractions;
    for (const auto& [id, count] : inside) {
      if (cfg.exclusion_after_claim && immune.count(id) > 0) continue;
      const double sigma = static_cast<double>(count) / static_cast<double>(totals.at(id));
      if (sigma > cfg.delta2) {
        claimed.push_back(id);
        fractions.push_back(sigma);
      }
    }

    if (!claimed.empty()) {
      const std::unordered_set<int> claimed_set(claimed.begin(), claimed.end());
      long long relabeled = 0;
      for (std::size_t p = 0; p < cloud.size(); ++p) {
        if (current[p] >= 0 && claimed_set.count(current[p]) > 0) {
          current[p] = next_label;
          ++relabeled;
        }
      }
      for (int id : claimed) totals.erase(id);
      totals[next_label] = relabeled;
      immune.insert(next_label);
      if (audit != nullptr)
        audit->claims.push_back(
            {static_cast<int>(rank), order[rank], claimed, fractions, next_label});
    }
    ++next_label;  // every box consumes a fresh id, claim or not
  }

  return renumber_by_first_occurrence(current);
}

}  // namespace instfuse
