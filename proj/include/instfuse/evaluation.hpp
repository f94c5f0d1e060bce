// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

/// Intersection-over-union of two point-id sets, both sorted ascending.
inline double iou(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("iou: empty point set");
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// One predicted instance with its confidence score.
struct ScoredInstance {
  std::vector<int> points;  // sorted ascending
  double confidence = 0.0;
};

namespace detail {

/// Deterministic evaluation order: confidence desc, then size desc, then
/// smallest first point id.
inline std::vector<int> prediction_order(const std::vector<ScoredInstance>& preds) {
  std::vector<int> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const ScoredInstance& pa = preds[static_cast<std::size_t>(a)];
    const ScoredInstance& pb = preds[static_cast<std::size_t>(b)];
    if (pa.confidence != pb.confidence) return pa.confidence > pb.confidence;
    if (pa.points.size() != pb.points.size()) return pa.points.size() > pb.points.size();
    return pa.points.front() < pb.points.front();
  });
  return order;
}

}  // namespace detail

/// Average precision at one IoU threshold: predictions are greedily matched
/// in confidence order to the best still-unmatched ground-truth instance
/// (ties toward the lowest index; a match needs IoU >= threshold), and the
/// precision/recall curve is integrated with all-point interpolation.
inline double average_precision(const std::vector<ScoredInstance>& preds,
                                const std::vector<std::vector<int>>& gts, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("average_precision: threshold must lie in (0,1]");
  const std::size_t g = gts.size();
  if (g == 0) return preds.empty() ? 1.0 : 0.0;
  if (preds.empty()) return 0.0;

  const std::vector<int> order = detail::prediction_order(preds);
  std::vector<char> gt_used(g, 0);
  std::vector<char> is_tp(order.size(), 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const ScoredInstance& p = preds[static_cast<std::size_t>(order[rank])];
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t k = 0; k < g; ++k) {
      if (gt_used[k]) continue;
      const double v = iou(p.points, gts[k]);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(k);
      }
    }
    if (best_gt >= 0 && best >= threshold) {
      gt_used[static_cast<std::size_t>(best_gt)] = 1;
      is_tp[rank] = 1;
    }
  }

  // all-point interpolation: precision at each recall level is the max
  // precision at any recall >= it, i.e. a rectangle sum over recall steps
  std::vector<double> precision(order.size()), recall(order.size());
  int tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (is_tp[rank]) ++tp;
    precision[rank] = static_cast<double>(tp) / static_cast<double>(rank + 1);
    recall[rank] = static_cast<double>(tp) / static_cast<double>(g);
  }
  for (std::size_t rank = order.size(); rank-- > 1;)
    precision[rank - 1] = std::max(precision[rank - 1], precision[rank]);
  double ap = recall[0] * precision[0];
  for (std::size_t rank = 1; rank < order.size(); ++rank)
    ap += (recall[rank] - recall[rank - 1]) * precision[rank];
  return ap;
}

struct EvalReport {
  double map = 0.0;   // mean AP over IoU 0.50:0.05:0.95
  double ap50 = 0.0;  // AP at IoU 0.50
  double ap25 = 0.0;  // AP at IoU 0.25
  std::vector<std::pair<double, double>> per_threshold;  // (threshold, AP)
  struct Match {
    int pred_rank = 0;    // evaluation order at IoU 0.50
    int pred_size = 0;
    int matched_gt = -1;  // -1 = unmatched
    double iou = 0.0;
  };
  std::vector<Match> matches_at_50;
  int num_predictions = 0;
  int num_ground_truth = 0;
  std::string confidence_proxy;
  std::string matching_protocol;
};

/// Group per-point labels into instance point sets: label -> sorted ids.
/// Points with label < 0 are dropped; `exclude` marks points to ignore.
inline std::vector<std::vector<int>> group_instances(const std::vector<int>& labels,
                                                     const std::vector<char>& exclude) {
  std::map<int, std::vector<int>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || exclude[i]) continue;
    by_label[labels[i]].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> out;
  out.reserve(by_label.size());
  for (auto& [label, pts] : by_label) out.push_back(std::move(pts));
  return out;
}

/// Class-agnostic instance-segmentation quality of `pred` against `gt`.
/// Ground-truth labels < 0 mark unannotated points, which are excluded from
/// both sides before matching. Confidence is a proxy (predicted instance
/// point count by default) since the pipeline produces no learned scores.
inline EvalReport evaluate(const Partition& pred, const Partition& gt,
                           const std::string& confidence_proxy = "point_count") {
  if (pred.labels.size() != gt.labels.size())
    throw std::invalid_argument("evaluate: prediction/ground-truth length mismatch");
  if (pred.labels.empty()) throw std::invalid_argument("evaluate: empty scene");
  if (confidence_proxy != "point_count" && confidence_proxy != "uniform")
    throw std::invalid_argument("evaluate: unknown confidence proxy '" + confidence_proxy + "'");

  std::vector<char> ignored(gt.labels.size(), 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i)
    if (gt.labels[i] < 0) ignored[i] = 1;

  const std::vector<std::vector<int>> gt_sets = group_instances(gt.labels, ignored);
  const std::vector<std::vector<int>> pred_sets = group_instances(pred.labels, ignored);
  std::vector<ScoredInstance> preds;
  preds.reserve(pred_sets.size());
  for (const std::vector<int>& pts : pred_sets)
    preds.push_back({pts, confidence_proxy == "point_count"
                              ? static_cast<double>(pts.size())
                              : 1.0});

  EvalReport report;
  report.num_predictions = static_cast<int>(preds.size());
  report.num_ground_truth = static_cast<int>(gt_sets.size());
  report.confidence_proxy = confidence_proxy;
  report.matching_protocol =
      "greedy by confidence (desc), ties by size (desc) then first point id (asc); "
      "each prediction takes the best unmatched ground truth (ties toward lowest index); "
      "all-point interpolated precision/recall";

  double sum = 0.0;
  for (int step = 0; step < 10; ++step) {
    const double threshold = 0.50 + 0.05 * step;
    const double ap = average_precision(preds, gt_sets, threshold);
    report.per_threshold.emplace_back(threshold, ap);
    sum += ap;
  }
  report.map = sum / 10.0;
  report.ap50 = report.per_threshold.front().second;
  report.ap25 = average_precision(preds, gt_sets, 0.25);

  if (!preds.empty() && !gt_sets.empty()) {
    const std::vector<int> order = detail::prediction_order(preds);
    std::vector<char> gt_used(gt_sets.size(), 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const ScoredInstance& p = preds[static_cast<std::size_t>(order[rank])];
      double best = 0.0;
      int best_gt = -1;
      for (std::size_t k = 0; k < gt_sets.size(); ++k) {
        if (gt_used[k]) continue;
        const double v = iou(p.points, gt_sets[k]);
        if (v > best) {
          best = v;
          best_gt = static_cast<int>(k);
        }
      }
      EvalReport::Match m;
      m.pred_rank = static_cast<int>(rank);
      m.pred_size = static_cast<int>(p.points.size());
      if (best_gt >= 0 && best >= 0.50) {
        gt_used[static_cast<std::size_t>(best_gt)] = 1;
        m.matched_gt = best_gt;
        m.iou = best;
      }
      report.matches_at_50.push_back(m);
    }
  }
  return report;
}

}  // namespace instfuse
