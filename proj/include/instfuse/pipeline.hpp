// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instfuse/affinity.hpp"
#include "instfuse/color.hpp"
#include "instfuse/config.hpp"
#include "instfuse/io/ply.hpp"
#include "instfuse/merging.hpp"
#include "instfuse/normals.hpp"
#include "instfuse/point_cloud.hpp"
#include "instfuse/primitives.hpp"

namespace instfuse {

struct SceneResult {
  Partition superpoints;
  Partition grown;
  Partition instances;  // final labels after box refinement
  MergeAudit merge_audit;
  RefineAudit refine_audit;
  int affinity_edges = 0;  // superpoint pairs with co-visible evidence
};

/// Run the full pipeline: normals -> geometric/textural superpoints ->
/// mask-fused affinity graph -> distance-decayed region growing -> box
/// refinement. `boxes` may be empty, which skips nothing but claims nothing.
inline SceneResult segment_scene(PointCloud& cloud, const FrameSet& frames,
                                 const std::vector<Box3D>& boxes, const PipelineConfig& config,
                                 unsigned threads = 1) {
  config.validate();
  cloud.validate();
  if (!cloud.has_normals()) cloud = estimate_normals(cloud, config.knn_k, threads);

  SceneResult result;
  result.superpoints = compute_primitives(cloud, config.primitive_config(), config.knn_k, threads);

  AffinityParams ap;
  ap.depth_tolerance_m = config.depth_tolerance_m;
  ap.min_gamma = config.min_gamma;
  ap.threads = threads;
  const AffinityGraph graph = build_affinity_graph(cloud, result.superpoints, frames, ap);
  for (int i = 0; i < graph.num_superpoints; ++i)
    for (int j = i + 1; j < graph.num_superpoints; ++j)
      if (graph.at(i, j) >= 0.0) ++result.affinity_edges;

  result.grown = region_grow(graph, result.superpoints, config.merge_config(), config.min_gamma,
                             &result.merge_audit);
  result.instances =
      refine_with_boxes(result.grown, cloud, boxes, config.merge_config(), &result.refine_audit);
  return result;
}

/// Reproducibility record for one run: the exact configuration, fingerprints
/// of every input file, and coarse stage statistics. Deliberately excludes
/// anything execution-dependent (thread count, timings) so reruns of the
/// same inputs produce the same manifest.
inline nlohmann::json run_manifest_json(const PipelineConfig& config,
                                        const std::map<std::string, std::string>& input_digests,
                                        const SceneResult& result, std::size_t num_points,
                                        std::size_t num_frames, std::size_t num_boxes) {
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& [name, digest] : input_digests) digests[name] = digest;
  nlohmann::json stats{{"num_points", num_points},
                       {"num_frames", num_frames},
                       {"num_boxes", num_boxes},
                       {"num_superpoints", result.superpoints.num_segments},
                       {"affinity_edges", result.affinity_edges},
                       {"merges_per_pass", result.merge_audit.per_pass_counts},
                       {"instances_after_growth", result.grown.num_segments},
                       {"boxes_with_claims", result.refine_audit.claims.size()},
                       {"instances_final", result.instances.num_segments}};
  return nlohmann::json{{"config", config.to_json()}, {"inputs", digests}, {"stats", stats}};
}

/// Write a copy of the cloud recolored by instance, with the labels stored
/// alongside, for eyeballing results in any PLY viewer.
inline void export_colored_ply(const PointCloud& cloud, const std::vector<int>& labels,
                               const std::string& path) {
  if (labels.size() != cloud.size())
    throw std::runtime_error("export: label count does not match cloud");
  PointCloud colored;
  colored.positions = cloud.positions;
  colored.colors.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) colored.colors[i] = instance_color(labels[i]);
  save_ply(colored, path, &labels);
}

}  // namespace instfuse
