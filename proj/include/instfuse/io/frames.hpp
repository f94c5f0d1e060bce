// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instfuse/affinity.hpp"
#include "instfuse/io/pgm.hpp"
#include "instfuse/merging.hpp"

namespace instfuse {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline CameraFrame camera_from_json(const nlohmann::json& j) {
  CameraFrame cam;
  try {
    cam.frame_id = j.at("frame_id").get<int>();
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto rows = j.at("cam_to_world");
    if (!rows.is_array() || rows.size() != 4)
      throw std::runtime_error("cam_to_world must be a 4x4 array");
    for (int r = 0; r < 4; ++r) {
      if (!rows[r].is_array() || rows[r].size() != 4)
        throw std::runtime_error("cam_to_world must be a 4x4 array");
      for (int c = 0; c < 4; ++c) cam.cam_to_world(r, c) = rows[r][c].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("camera json: ") + e.what());
  }
  cam.validate();
  return cam;
}

inline nlohmann::json camera_to_json(const CameraFrame& cam) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(cam.cam_to_world(r, c));
    rows.push_back(row);
  }
  return nlohmann::json{{"frame_id", cam.frame_id}, {"fx", cam.fx},     {"fy", cam.fy},
                        {"cx", cam.cx},             {"cy", cam.cy},     {"width", cam.width},
                        {"height", cam.height},     {"cam_to_world", rows}};
}

/// Load every frame under `dir`: each <id>.json camera sits beside
/// <id>.depth.pgm and <id>.mask.pgm. Frames come back ascending by id.
inline FrameSet load_frames(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("frames: not a directory: " + dir);
  std::vector<fs::path> jsons;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".json" && p.stem().extension().empty()) jsons.push_back(p);
  }
  if (jsons.empty()) throw std::runtime_error("frames: no camera files in " + dir);

  FrameSet frames;
  frames.reserve(jsons.size());
  for (const fs::path& p : jsons) {
    Frame f;
    f.camera = camera_from_json(load_json_file(p.string()));
    const std::string stem = p.stem().string();
    if (stem != std::to_string(f.camera.frame_id))
      throw std::runtime_error("frames: file " + p.filename().string() + " declares frame_id " +
                               std::to_string(f.camera.frame_id));
    const fs::path base = p.parent_path() / stem;
    f.depth = load_depth_pgm(base.string() + ".depth.pgm");
    f.mask = load_mask_pgm(base.string() + ".mask.pgm");
    if (f.depth.width != f.camera.width || f.depth.height != f.camera.height)
      throw std::runtime_error("frames: depth size mismatch for frame " + stem);
    if (f.mask.width != f.camera.width || f.mask.height != f.camera.height)
      throw std::runtime_error("frames: mask size mismatch for frame " + stem);
    frames.push_back(std::move(f));
  }
  std::sort(frames.begin(), frames.end(),
            [](const Frame& a, const Frame& b) { return a.camera.frame_id < b.camera.frame_id; });
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].camera.frame_id == frames[i - 1].camera.frame_id)
      throw std::runtime_error("frames: duplicate frame_id " +
                               std::to_string(frames[i].camera.frame_id));
  return frames;
}

inline void save_frames(const FrameSet& frames, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const Frame& f : frames) {
    const std::string base = (fs::path(dir) / std::to_string(f.camera.frame_id)).string();
    save_json_file(camera_to_json(f.camera), base + ".json");
    save_depth_pgm(f.depth, base + ".depth.pgm");
    save_mask_pgm(f.mask, base + ".mask.pgm");
  }
}

/// Detection boxes: a JSON array of {"min": [x,y,z], "max": [x,y,z]}.
inline std::vector<Box3D> load_boxes(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  if (!j.is_array()) throw std::runtime_error("boxes: expected a JSON array in " + path);
  std::vector<Box3D> boxes;
  boxes.reserve(j.size());
  for (const auto& item : j) {
    Box3D b;
    try {
      for (int a = 0; a < 3; ++a) {
        b.min[a] = item.at("min").at(a).get<double>();
        b.max[a] = item.at("max").at(a).get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("boxes: ") + e.what());
    }
    b.validate();
    boxes.push_back(b);
  }
  return boxes;
}

inline void save_boxes(const std::vector<Box3D>& boxes, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const Box3D& b : boxes)
    j.push_back(nlohmann::json{{"min", {b.min.x(), b.min.y(), b.min.z()}},
                               {"max", {b.max.x(), b.max.y(), b.max.z()}}});
  save_json_file(j, path);
}

/// Per-point integer labels, one per line.
inline std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open " + path);
  std::vector<int> labels;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      labels.push_back(v);
    } catch (const std::logic_error&) {
      throw std::runtime_error("labels: invalid entry '" + tok + "' in " + path);
    }
  }
  if (labels.empty()) throw std::runtime_error("labels: empty file " + path);
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("labels: cannot write " + path);
  for (int l : labels) out << l << "\n";
  if (!out) throw std::runtime_error("labels: write failed for " + path);
}

}  // namespace instfuse
