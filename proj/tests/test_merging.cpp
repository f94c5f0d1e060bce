// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <random>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "instfuse/affinity.hpp"
#include "instfuse/merging.hpp"

using instfuse::AffinityGraph;
using instfuse::AffinityParams;
using instfuse::Box3D;
using instfuse::Frame;
using instfuse::MergeAudit;
using instfuse::MergeConfig;
using instfuse::Partition;
using instfuse::PointCloud;
using instfuse::RefineAudit;
using instfuse::Vec3;

namespace {

/// One-frame fixture: points sit on the z=2 plane, each in its own pixel
/// column, and the mask id per point is chosen by the caller. Camera is the
/// identity pose with fx=fy=100, c=(50,50), so u = 50*x + 50.
struct PlaneScene {
  PointCloud cloud;
  Partition part;
  std::vector<Frame> frames;

  /// Adds one point under the given superpoint and mask id (0 = unlabeled).
  void add_point(int superpoint, int mask_id) {
    const int i = static_cast<int>(cloud.size());
    const double x = -0.6 + 0.04 * i;
    cloud.positions.emplace_back(x, 0.0, 2.0);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
    part.labels.push_back(superpoint);
    part.num_segments = std::max(part.num_segments, superpoint + 1);
    pixel_ids.push_back(mask_id);
  }

  AffinityGraph graph() {
    Frame f;
    f.camera.frame_id = 0;
    f.camera.width = 100;
    f.camera.height = 100;
    f.camera.fx = f.camera.fy = 100.0;
    f.camera.cx = f.camera.cy = 50.0;
    f.depth.width = f.mask.width = 100;
    f.depth.height = f.mask.height = 100;
    f.depth.values.assign(100 * 100, 2.0);
    f.mask.ids.assign(100 * 100, 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.positions[i];
      const int u = instfuse::round_half_up(100.0 * p.x() / p.z() + 50.0);
      const int v = instfuse::round_half_up(100.0 * p.y() / p.z() + 50.0);
      f.depth.at(u, v) = p.z();
      f.mask.at(u, v) = static_cast<std::uint16_t>(pixel_ids[i]);
    }
    frames = {f};
    return instfuse::build_affinity_graph(cloud, part, frames, AffinityParams{});
  }

 private:
  std::vector<int> pixel_ids;
};

}  // namespace

TEST_CASE("merge confidence decays with distance beyond the floor") {
  CHECK(instfuse::merge_confidence(0.9, 2.0, 1.0) == Catch::Approx(0.45).margin(1e-9));
  CHECK(instfuse::merge_confidence(0.9, 0.5, 1.0) == Catch::Approx(0.9).margin(1e-9));
  CHECK(instfuse::merge_confidence(0.0, 7.3, 1.0) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("merge config validation pins the schedule shape") {
  MergeConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.delta1_schedule = {0.5, 0.9};  // must be strictly decreasing
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MergeConfig{};
  cfg.delta1_schedule.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MergeConfig{};
  cfg.delta2 = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MergeConfig{};
  cfg.distance_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("region growing merges near superpoints that share a mask") {
  PlaneScene scene;
  for (int i = 0; i < 3; ++i) scene.add_point(0, 5);
  for (int i = 0; i < 3; ++i) scene.add_point(1, 5);  // adjacent columns: ~0.1 m apart
  const AffinityGraph graph = scene.graph();
  REQUIRE(graph.at(0, 1) == Catch::Approx(1.0).margin(1e-12));

  const Partition grown = instfuse::region_grow(graph, scene.part, MergeConfig{});
  CHECK(grown.num_segments == 1);
}

TEST_CASE("region growing refuses distant superpoints despite full affinity") {
  PlaneScene scene;
  for (int i = 0; i < 3; ++i) scene.add_point(0, 5);
  for (int i = 0; i < 3; ++i) scene.add_point(1, 5);
  // Push superpoint 1 down the optical axis: uniform scaling keeps every
  // pixel, so the mask evidence is untouched while world distance grows.
  for (std::size_t i = 3; i < 6; ++i) scene.cloud.positions[i] *= 2.5;
  const AffinityGraph graph = scene.graph();
  REQUIRE(graph.at(0, 1) == Catch::Approx(1.0).margin(1e-12));

  MergeAudit audit;
  const Partition grown = instfuse::region_grow(graph, scene.part, MergeConfig{}, 1e-4, &audit);
  CHECK(grown.num_segments == 2);  // confidence 1/3 falls below the last 0.5 pass
  CHECK(audit.merges.empty());
}

TEST_CASE("region growing re-aggregates histograms after each merge") {
  // Four superpoints in a chain. Mask-id histograms are laid out so that the
  // pairs (0,1), (0,2), (1,2) score high while 3 stays low against everyone:
  //   sp0 = {1:3, 2:4}, sp1 = {1:4, 2:3}, sp2 = {1:4, 2:4}, sp3 = {1:1, 3:7}
  PlaneScene scene;
  for (int i = 0; i < 3; ++i) scene.add_point(0, 1);
  for (int i = 0; i < 4; ++i) scene.add_point(0, 2);
  for (int i = 0; i < 4; ++i) scene.add_point(1, 1);
  for (int i = 0; i < 3; ++i) scene.add_point(1, 2);
  for (int i = 0; i < 4; ++i) scene.add_point(2, 1);
  for (int i = 0; i < 4; ++i) scene.add_point(2, 2);
  scene.add_point(3, 1);
  for (int i = 0; i < 7; ++i) scene.add_point(3, 3);

  const AffinityGraph graph = scene.graph();
  CHECK(graph.at(0, 1) == Catch::Approx(24.0 / 25.0).margin(1e-12));
  CHECK(graph.at(2, 3) == Catch::Approx(0.1).margin(1e-12));

  MergeAudit audit;
  const Partition grown = instfuse::region_grow(graph, scene.part, MergeConfig{}, 1e-4, &audit);
  REQUIRE(grown.num_segments == 2);
  // superpoints 0,1,2 collapse into one instance; 3 stays alone
  CHECK(grown.labels[0] == grown.labels[10]);
  CHECK(grown.labels[0] == grown.labels[18]);
  CHECK(grown.labels[0] != grown.labels[25]);
  REQUIRE(audit.merges.size() == 2);
  CHECK(audit.merges[0].pass == 0);  // both merges clear the 0.9 threshold
  CHECK(audit.merges[1].pass == 0);
  CHECK(audit.merges[0].confidence >= audit.merges[1].confidence);
}

TEST_CASE("box refinement relabels a fully contained instance") {
  PointCloud cloud;
  for (double x : {0.0, 0.1, 1.0, 1.1, 1.2}) {
    cloud.positions.emplace_back(x, 0.0, 0.0);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
  }
  Partition labels;
  labels.labels = {0, 0, 1, 1, 1};
  labels.num_segments = 2;

  const Box3D box{Vec3(0.9, -0.5, -0.5), Vec3(1.3, 0.5, 0.5)};
  RefineAudit audit;
  const Partition out = instfuse::refine_with_boxes(labels, cloud, {box}, MergeConfig{}, &audit);
  CHECK(out.labels == labels.labels);  // same structure after renumbering
  CHECK(out.num_segments == 2);
  REQUIRE(audit.claims.size() == 1);
  CHECK(audit.claims[0].claimed_ids == std::vector<int>{1});
  REQUIRE(audit.claims[0].overlap_fractions.size() == 1);
  CHECK(audit.claims[0].overlap_fractions[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("box refinement merges split halves captured by one box") {
  PointCloud cloud;
  for (double x : {0.0, 0.1, 1.0, 1.1, 1.2, 1.3, 1.4}) {
    cloud.positions.emplace_back(x, 0.0, 0.0);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
  }
  Partition labels;
  labels.labels = {0, 0, 1, 1, 1, 2, 2};  // instance split into 1 and 2
  labels.num_segments = 3;

  const Box3D box{Vec3(0.9, -0.5, -0.5), Vec3(1.5, 0.5, 0.5)};
  const Partition out = instfuse::refine_with_boxes(labels, cloud, {box}, MergeConfig{});
  CHECK(out.num_segments == 2);
  CHECK(out.labels == std::vector<int>{0, 0, 1, 1, 1, 1, 1});
}

TEST_CASE("box refinement with no boxes is the identity") {
  PointCloud cloud;
  for (double x : {0.0, 0.1, 1.0}) {
    cloud.positions.emplace_back(x, 0.0, 0.0);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
  }
  Partition labels;
  labels.labels = {0, 0, 1};
  labels.num_segments = 2;
  const Partition out = instfuse::refine_with_boxes(labels, cloud, {}, MergeConfig{});
  CHECK(out.labels == labels.labels);
  CHECK(out.num_segments == 2);
}

TEST_CASE("box refinement skips instances below the overlap threshold") {
  PointCloud cloud;
  for (int i = 0; i < 10; ++i) {
    cloud.positions.emplace_back(0.1 * i, 0.0, 0.0);  // x in [0, 0.9]
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
  }
  Partition labels;
  labels.labels.assign(10, 0);
  labels.num_segments = 1;

  // Box holds 7 of 10 points: sigma 0.7 <= 0.75 -> no claim.
  const Box3D box{Vec3(-0.05, -0.5, -0.5), Vec3(0.65, 0.5, 0.5)};
  RefineAudit audit;
  const Partition out = instfuse::refine_with_boxes(labels, cloud, {box}, MergeConfig{}, &audit);
  CHECK(out.labels == labels.labels);
  CHECK(audit.claims.empty());
}

TEST_CASE("box refinement output coarsens its input") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud cloud;
    std::vector<int> raw;
    for (int i = 0; i < 200; ++i) {
      cloud.positions.emplace_back(unit(rng), unit(rng), unit(rng));
      cloud.colors.emplace_back(0.5, 0.5, 0.5);
      raw.push_back(static_cast<int>(unit(rng) * 8.0));
    }
    const Partition labels = instfuse::renumber_by_first_occurrence(raw);

    std::vector<Box3D> boxes;
    for (int b = 0; b < 3; ++b) {
      const Vec3 lo(unit(rng) * 0.6, unit(rng) * 0.6, unit(rng) * 0.6);
      boxes.push_back({lo, lo + Vec3(0.2 + unit(rng) * 0.4, 0.2 + unit(rng) * 0.4,
                                     0.2 + unit(rng) * 0.4)});
    }
    const Partition out = instfuse::refine_with_boxes(labels, cloud, boxes, MergeConfig{});

    CHECK(out.num_segments <= labels.num_segments);
    std::map<int, std::set<int>> images;
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
      images[labels.labels[i]].insert(out.labels[i]);
    for (const auto& [input_label, outputs] : images) CHECK(outputs.size() == 1);
  }
}

TEST_CASE("exclusion shields a claimed small object from larger boxes") {
  PointCloud cloud;
  std::vector<int> raw;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 60; ++i) {  // large object: unit box at the origin
    cloud.positions.emplace_back(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) * 0.5);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
    raw.push_back(0);
  }
  for (int i = 0; i < 20; ++i) {  // small object resting on top
    cloud.positions.emplace_back(unit(rng) * 0.2 - 0.1, unit(rng) * 0.2 - 0.1,
                                 0.55 + unit(rng) * 0.2);
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
    raw.push_back(1);
  }
  Partition labels = instfuse::renumber_by_first_occurrence(raw);

  const Box3D small{Vec3(-0.12, -0.12, 0.52), Vec3(0.12, 0.12, 0.78)};
  const Box3D large{Vec3(-0.6, -0.6, -0.1), Vec3(0.6, 0.6, 0.8)};  // covers both

  MergeConfig shielded;  // exclusion_after_claim = true
  RefineAudit audit_on;
  const Partition two =
      instfuse::refine_with_boxes(labels, cloud, {large, small}, shielded, &audit_on);
  CHECK(two.num_segments == 2);

  MergeConfig open = shielded;
  open.exclusion_after_claim = false;
  RefineAudit audit_off;
  const Partition one = instfuse::refine_with_boxes(labels, cloud, {large, small}, open, &audit_off);
  CHECK(one.num_segments == 1);
  // The audit names the large box (rank 1, input index 0) as the claimer of
  // the small object's fresh label.
  REQUIRE(audit_off.claims.size() == 2);
  CHECK(audit_off.claims[1].box_input_index == 0);
  CHECK(audit_off.claims[1].claimed_ids.size() == 2);
}

TEST_CASE("boxes validate their extents") {
  CHECK_THROWS_AS((Box3D{Vec3(0, 0, 0), Vec3(0, 1, 1)}.validate()), std::invalid_argument);
  const Box3D box{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK_NOTHROW(box.validate());
  CHECK(box.volume() == Catch::Approx(1.0).margin(1e-12));
  CHECK(box.contains(Vec3(0, 0, 0)));  // inclusive boundary
  CHECK(box.contains(Vec3(1, 1, 1)));
  CHECK_FALSE(box.contains(Vec3(1.001, 0.5, 0.5)));
}
