// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the instance-fusion pipeline.
//
//   segment     full pipeline: scene + frames (+ boxes) -> instance labels
//   eval        score predicted labels against ground truth
//   synth       generate a synthetic scene with ground truth
//   export      paint a cloud by instance labels for inspection
//   primitives  over-segmentation stage only

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "instfuse/instfuse.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::optional<double> wn, wc;
};

instfuse::PipelineConfig resolve_config(const ConfigFlags& flags) {
  instfuse::PipelineConfig config;
  if (!flags.config_path.empty())
    config = instfuse::PipelineConfig::from_json(instfuse::load_json_file(flags.config_path));
  if (flags.wn) config.w_n = *flags.wn;
  if (flags.wc) config.w_c = *flags.wc;
  config.validate();
  return config;
}

/// Deletes everything it registered unless release() was called, so a failed
/// run leaves no half-written outputs behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (released_) return;
    for (const std::string& path : paths_) {
      std::error_code ec;
      fs::remove_all(path, ec);
    }
  }
  void track(const std::string& path) { paths_.push_back(path); }
  void release() { released_ = true; }

 private:
  std::vector<std::string> paths_;
  bool released_ = false;
};

int run_segment(const std::string& scene_path, const std::string& frames_dir,
                const std::string& boxes_path, bool no_boxes, const ConfigFlags& flags,
                const std::string& out_dir, unsigned threads) {
  const instfuse::PipelineConfig config = resolve_config(flags);
  instfuse::PointCloud cloud = instfuse::load_ply(scene_path);
  cloud.validate();
  const instfuse::FrameSet frames = instfuse::load_frames(frames_dir);
  std::vector<instfuse::Box3D> boxes;
  if (!no_boxes && !boxes_path.empty()) boxes = instfuse::load_boxes(boxes_path);

  std::map<std::string, std::string> digests;
  digests["scene"] = instfuse::digest_file(scene_path);
  if (!no_boxes && !boxes_path.empty()) digests["boxes"] = instfuse::digest_file(boxes_path);
  if (!flags.config_path.empty()) digests["config"] = instfuse::digest_file(flags.config_path);
  for (const instfuse::Frame& f : frames) {
    const std::string base = "frames/" + std::to_string(f.camera.frame_id);
    const fs::path disk = fs::path(frames_dir) / std::to_string(f.camera.frame_id);
    digests[base + ".json"] = instfuse::digest_file(disk.string() + ".json");
    digests[base + ".depth.pgm"] = instfuse::digest_file(disk.string() + ".depth.pgm");
    digests[base + ".mask.pgm"] = instfuse::digest_file(disk.string() + ".mask.pgm");
  }

  const instfuse::SceneResult result = instfuse::segment_scene(cloud, frames, boxes, config, threads);

  fs::create_directories(out_dir);
  OutputGuard guard;
  const std::string labels_path = (fs::path(out_dir) / "pred_labels.txt").string();
  const std::string colored_path = (fs::path(out_dir) / "colored.ply").string();
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  guard.track(labels_path);
  guard.track(colored_path);
  guard.track(manifest_path);
  instfuse::save_labels(result.instances.labels, labels_path);
  instfuse::export_colored_ply(cloud, result.instances.labels, colored_path);
  instfuse::save_json_file(instfuse::run_manifest_json(config, digests, result, cloud.size(),
                                                       frames.size(), boxes.size()),
                           manifest_path);
  guard.release();

  std::cout << "segmented " << cloud.size() << " points into " << result.instances.num_segments
            << " instances (" << result.superpoints.num_segments << " primitives; outputs in "
            << out_dir << ")\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, const std::string& proxy) {
  const instfuse::Partition pred = instfuse::renumber_by_first_occurrence(instfuse::load_labels(pred_path));
  instfuse::Partition gt;
  gt.labels = instfuse::load_labels(gt_path);
  for (int l : gt.labels) gt.num_segments = std::max(gt.num_segments, l + 1);
  const instfuse::EvalReport report = instfuse::evaluate(pred, gt, proxy);

  nlohmann::json per_threshold = nlohmann::json::array();
  for (const auto& [threshold, ap] : report.per_threshold)
    per_threshold.push_back({{"iou", threshold}, {"ap", ap}});
  const nlohmann::json j{{"map", report.map},
                         {"ap50", report.ap50},
                         {"ap25", report.ap25},
                         {"per_threshold", per_threshold},
                         {"num_predictions", report.num_predictions},
                         {"num_ground_truth", report.num_ground_truth},
                         {"confidence_proxy", report.confidence_proxy},
                         {"matching_protocol", report.matching_protocol}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_synth(const std::string& spec_path, const std::string& preset, bool split,
              std::optional<std::uint64_t> seed, const std::string& out_dir, unsigned threads) {
  instfuse::SceneSpec spec;
  if (!preset.empty()) {
    if (preset != "room-8") throw std::runtime_error("unknown preset '" + preset + "'");
    spec = instfuse::make_room8_spec(seed.value_or(1), split);
  } else if (!spec_path.empty()) {
    spec = instfuse::scene_spec_from_json(instfuse::load_json_file(spec_path));
    if (seed) spec.seed = *seed;
  } else {
    throw std::runtime_error("synth needs --spec or --preset");
  }

  const instfuse::SynthScene scene = instfuse::generate_scene(spec, threads);
  OutputGuard guard;
  guard.track((fs::path(out_dir) / "scene.ply").string());
  guard.track((fs::path(out_dir) / "frames").string());
  guard.track((fs::path(out_dir) / "boxes.json").string());
  guard.track((fs::path(out_dir) / "gt_labels.txt").string());
  guard.track((fs::path(out_dir) / "scene_spec.json").string());
  instfuse::export_scene(scene, out_dir);
  instfuse::save_json_file(instfuse::scene_spec_to_json(spec),
                           (fs::path(out_dir) / "scene_spec.json").string());
  guard.release();

  std::cout << "generated " << scene.cloud.size() << " points, " << scene.gt.num_segments
            << " instances, " << scene.frames.size() << " frames in " << out_dir << "\n";
  return 0;
}

int run_export(const std::string& scene_path, const std::string& labels_path,
               const std::string& out_path) {
  const instfuse::PointCloud cloud = instfuse::load_ply(scene_path);
  const std::vector<int> labels = instfuse::load_labels(labels_path);
  instfuse::export_colored_ply(cloud, labels, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_primitives(const std::string& scene_path, const ConfigFlags& flags,
                   const std::string& out_path, unsigned threads) {
  const instfuse::PipelineConfig config = resolve_config(flags);
  instfuse::PointCloud cloud = instfuse::load_ply(scene_path);
  cloud.validate();
  const instfuse::Partition primitives =
      instfuse::compute_primitives(cloud, config.primitive_config(), config.knn_k, threads);
  instfuse::save_labels(primitives.labels, out_path);
  std::cout << primitives.num_segments << " primitives -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"class-agnostic 3D instance segmentation via 2D mask fusion"};
  app.require_subcommand(1);

  std::string scene_path, frames_dir, boxes_path, out_dir, out_path;
  std::string pred_path, gt_path, proxy = "point_count";
  std::string spec_path, preset, labels_path;
  bool no_boxes = false, split = false;
  unsigned threads = 0;  // 0 = all hardware threads
  std::optional<std::uint64_t> seed;
  ConfigFlags flags;

  CLI::App* segment = app.add_subcommand("segment", "run the full pipeline");
  segment->add_option("--scene", scene_path, "input PLY")->required();
  segment->add_option("--frames", frames_dir, "directory of posed frames")->required();
  segment->add_option("--boxes", boxes_path, "3D detection boxes JSON");
  segment->add_flag("--no-boxes", no_boxes, "skip box refinement");
  segment->add_option("--config", flags.config_path, "pipeline config JSON");
  segment->add_option("--wn", flags.wn, "override normal weight");
  segment->add_option("--wc", flags.wc, "override color weight");
  segment->add_option("--out", out_dir, "output directory")->required();
  segment->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--pred", pred_path, "predicted labels txt")->required();
  eval->add_option("--gt", gt_path, "ground-truth labels txt")->required();
  eval->add_option("--proxy", proxy, "confidence proxy: point_count | uniform");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--spec", spec_path, "scene spec JSON");
  synth->add_option("--preset", preset, "built-in scene family (room-8)");
  synth->add_flag("--split", split, "preset only: corrupt masks with part splits");
  synth->add_option("--seed", seed, "override the spec seed");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI::App* exp = app.add_subcommand("export", "write a cloud colored by labels");
  exp->add_option("--scene", scene_path, "input PLY")->required();
  exp->add_option("--labels", labels_path, "labels txt")->required();
  exp->add_option("--out", out_path, "output PLY")->required();

  CLI::App* prim = app.add_subcommand("primitives", "over-segmentation stage only");
  prim->add_option("--scene", scene_path, "input PLY")->required();
  prim->add_option("--config", flags.config_path, "pipeline config JSON");
  prim->add_option("--wn", flags.wn, "override normal weight");
  prim->add_option("--wc", flags.wc, "override color weight");
  prim->add_option("--out", out_path, "output labels txt")->required();
  prim->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (segment->parsed())
      return run_segment(scene_path, frames_dir, boxes_path, no_boxes, flags, out_dir, threads);
    if (eval->parsed()) return run_eval(pred_path, gt_path, proxy);
    if (synth->parsed()) return run_synth(spec_path, preset, split, seed, out_dir, threads);
    if (exp->parsed()) return run_export(scene_path, labels_path, out_path);
    if (prim->parsed()) return run_primitives(scene_path, flags, out_path, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
