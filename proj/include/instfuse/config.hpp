// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instfuse/merging.hpp"
#include "instfuse/primitives.hpp"

namespace instfuse {

/// Every knob of the pipeline in one place. A config file may set any subset
/// of the keys; unknown keys are rejected so typos fail loudly.
struct PipelineConfig {
  int knn_k = 30;                    // neighborhood size for normal estimation
  double w_n = 0.96;                 // normal-disagreement weight in edge costs
  double w_c = 0.04;                 // color-distance weight in edge costs
  double fzs_k = 0.06;               // graph-cut scale: higher = coarser segments
  int min_segment_size = 20;         // segments below this are absorbed
  int graph_knn = 8;                 // adjacency degree of the point graph
  double depth_tolerance_m = 0.05;   // occlusion slack when projecting to frames
  double min_gamma = 1e-4;           // drop frames with less co-visibility weight
  std::vector<double> delta1_schedule = {0.9, 0.8, 0.7, 0.6, 0.5};
  double delta2 = 0.75;              // box claim threshold on contained fraction
  double distance_floor = 1.0;       // metres; confidence denominator clamp
  bool ascending_boxes = true;       // smallest box claims first
  bool exclusion_after_claim = true; // claimed instances are immune afterwards
  std::string confidence_proxy = "point_count";

  PrimitiveConfig primitive_config() const {
    PrimitiveConfig c;
    c.w_n = w_n;
    c.w_c = w_c;
    c.fzs_k = fzs_k;
    c.min_segment_size = min_segment_size;
    c.graph_knn = graph_knn;
    return c;
  }

  MergeConfig merge_config() const {
    MergeConfig c;
    c.delta1_schedule = delta1_schedule;
    c.delta2 = delta2;
    c.distance_floor = distance_floor;
    c.ascending_boxes = ascending_boxes;
    c.exclusion_after_claim = exclusion_after_claim;
    return c;
  }

  void validate() const {
    if (knn_k < 3) throw std::invalid_argument("config: knn_k must be at least 3");
    if (!(depth_tolerance_m > 0.0))
      throw std::invalid_argument("config: depth_tolerance_m must be positive");
    if (!(min_gamma > 0.0)) throw std::invalid_argument("config: min_gamma must be positive");
    primitive_config().validate();
    merge_config().validate();
    if (confidence_proxy != "point_count" && confidence_proxy != "uniform")
      throw std::invalid_argument("config: unknown confidence_proxy '" + confidence_proxy + "'");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"knn_k", knn_k},
                          {"w_n", w_n},
                          {"w_c", w_c},
                          {"fzs_k", fzs_k},
                          {"min_segment_size", min_segment_size},
                          {"graph_knn", graph_knn},
                          {"depth_tolerance_m", depth_tolerance_m},
                          {"min_gamma", min_gamma},
                          {"delta1_schedule", delta1_schedule},
                          {"delta2", delta2},
                          {"distance_floor", distance_floor},
                          {"ascending_boxes", ascending_boxes},
                          {"exclusion_after_claim", exclusion_after_claim},
                          {"confidence_proxy", confidence_proxy}};
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    PipelineConfig c;
    for (const auto& [key, value] : j.items()) {
      if (key == "knn_k") c.knn_k = value.get<int>();
      else if (key == "w_n") c.w_n = value.get<double>();
      else if (key == "w_c") c.w_c = value.get<double>();
      else if (key == "fzs_k") c.fzs_k = value.get<double>();
      else if (key == "min_segment_size") c.min_segment_size = value.get<int>();
      else if (key == "graph_knn") c.graph_knn = value.get<int>();
      else if (key == "depth_tolerance_m") c.depth_tolerance_m = value.get<double>();
      else if (key == "min_gamma") c.min_gamma = value.get<double>();
      else if (key == "delta1_schedule") c.delta1_schedule = value.get<std::vector<double>>();
      else if (key == "delta2") c.delta2 = value.get<double>();
      else if (key == "distance_floor") c.distance_floor = value.get<double>();
      else if (key == "ascending_boxes") c.ascending_boxes = value.get<bool>();
      else if (key == "exclusion_after_claim") c.exclusion_after_claim = value.get<bool>();
      else if (key == "confidence_proxy") c.confidence_proxy = value.get<std::string>();
      else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
  }
};

}  // namespace instfuse
