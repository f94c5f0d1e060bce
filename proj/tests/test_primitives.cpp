// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "instfuse/graph_segmentation.hpp"
#include "instfuse/primitives.hpp"
#include "oracles.hpp"

using instfuse::Partition;
using instfuse::PointCloud;
using instfuse::PrimitiveConfig;
using instfuse::Vec3;
using instfuse::WeightedEdge;

namespace {

/// Rectangular grid of points on the z=0 plane spaced `step` apart, colored
/// by the given per-point rule.
template <typename ColorRule>
PointCloud plane_grid(int nx, int ny, double step, ColorRule color) {
  PointCloud cloud;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const Vec3 p(ix * step, iy * step, 0.0);
      cloud.positions.push_back(p);
      cloud.colors.push_back(color(p));
    }
  return cloud;
}

std::vector<int> segment_sizes(const Partition& part) {
  std::vector<int> sizes(static_cast<std::size_t>(part.num_segments), 0);
  for (int l : part.labels) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

}  // namespace

TEST_CASE("edge weight hits its closed-form corner cases") {
  PrimitiveConfig cfg;  // w_n=0.96, w_c=0.04
  const Vec3 up(0, 0, 1), down(0, 0, -1);
  const Vec3 black(0, 0, 0), white(1, 1, 1);

  CHECK(instfuse::edge_weight(up, up, white, white, cfg) == Catch::Approx(0.0).margin(1e-9));
  CHECK(instfuse::edge_weight(up, down, white, white, cfg) == Catch::Approx(0.96).margin(1e-9));
  CHECK(instfuse::edge_weight(up, up, black, white, cfg) == Catch::Approx(0.04).margin(1e-9));
}

TEST_CASE("edge weight is symmetric and in range") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PrimitiveConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 na = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Vec3 nb = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Vec3 ca(unit(rng), unit(rng), unit(rng));
    const Vec3 cb(unit(rng), unit(rng), unit(rng));
    const double w = instfuse::edge_weight(na, nb, ca, cb, cfg);
    CHECK(w == instfuse::edge_weight(nb, na, cb, ca, cfg));
    CHECK(w >= 0.0);
    CHECK(w <= cfg.w_n + cfg.w_c + 1e-12);
  }
}

TEST_CASE("primitive graph deduplicates mutual neighbors") {
  PointCloud cloud;
  cloud.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  cloud.colors = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  cloud.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
  PrimitiveConfig cfg;
  cfg.graph_knn = 1;
  const auto edges = instfuse::build_primitive_graph(cloud, cfg);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].a == 0);
  CHECK(edges[0].b == 1);
}

TEST_CASE("primitive graph on a unit square resolves diagonal ties by index") {
  PointCloud cloud;
  cloud.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  cloud.colors.assign(4, Vec3(0.5, 0.5, 0.5));
  cloud.normals.assign(4, Vec3(0, 0, 1));
  PrimitiveConfig cfg;
  cfg.graph_knn = 2;
  const auto edges = instfuse::build_primitive_graph(cloud, cfg);
  // Each corner's two nearest are its axis neighbors (distance 1 beats the
  // sqrt(2) diagonal), so exactly the four sides survive deduplication.
  REQUIRE(edges.size() == 4);
  std::set<std::pair<int, int>> got;
  for (const WeightedEdge& e : edges) got.emplace(e.a, e.b);
  CHECK(got == std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
}

TEST_CASE("primitive graph edge count stays within the knn bound") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  PointCloud cloud;
  for (int i = 0; i < 1000; ++i) {
    cloud.positions.emplace_back(dist(rng), dist(rng), dist(rng));
    cloud.colors.emplace_back(0.5, 0.5, 0.5);
    cloud.normals.emplace_back(0, 0, 1);
  }
  PrimitiveConfig cfg;
  const auto edges = instfuse::build_primitive_graph(cloud, cfg);
  CHECK(edges.size() <= cloud.size() * static_cast<std::size_t>(cfg.graph_knn));
  for (std::size_t i = 1; i < edges.size(); ++i)
    CHECK_FALSE(instfuse::edge_less(edges[i], edges[i - 1]));
}

TEST_CASE("graph cut on a weighted path splits at the heavy edge") {
  const std::vector<WeightedEdge> edges = {{0, 1, 0.0}, {2, 3, 0.0}, {1, 2, 1.0}};
  std::vector<WeightedEdge> sorted = edges;
  std::sort(sorted.begin(), sorted.end(), instfuse::edge_less);
  const Partition part = instfuse::segment_graph(sorted, 4, {0.1, 1});
  CHECK(part.num_segments == 2);
  CHECK(part.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("graph cut merges everything when all weights vanish") {
  std::vector<WeightedEdge> edges;
  for (int i = 0; i + 1 < 30; ++i) edges.push_back({i, i + 1, 0.0});
  const Partition part = instfuse::segment_graph(edges, 30, {0.06, 1});
  CHECK(part.num_segments == 1);
}

TEST_CASE("graph cut enforces the minimum segment size") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<WeightedEdge> edges;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) edges.push_back({a, b, weight(rng)});
    std::sort(edges.begin(), edges.end(), instfuse::edge_less);
    const Partition part = instfuse::segment_graph(edges, 6, {0.1, 3});
    for (int s : segment_sizes(part)) CHECK(s >= 3);
  }
}

TEST_CASE("graph cut rejects unsorted or out-of-range edges") {
  CHECK_THROWS_AS(instfuse::segment_graph({{0, 1, 0.5}, {1, 2, 0.2}}, 3, {0.1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(instfuse::segment_graph({{0, 5, 0.5}}, 3, {0.1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(instfuse::segment_graph({}, 0, {0.1, 1}), std::invalid_argument);
}

TEST_CASE("graph cut matches the naive criterion transcription on random graphs") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(unit(rng) * 49.0);
    std::vector<WeightedEdge> edges;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (unit(rng) < 0.25) continue;  // drop some pairs for variety
        // Quantized weights provoke ties so the canonical order matters.
        const double w = std::floor(unit(rng) * 8.0) / 8.0;
        edges.push_back({a, b, w});
      }
    const double scale = 0.05 + unit(rng) * 0.6;
    const int min_size = 1 + static_cast<int>(unit(rng) * 4.0);

    std::vector<WeightedEdge> sorted = edges;
    std::sort(sorted.begin(), sorted.end(), instfuse::edge_less);
    const Partition fast = instfuse::segment_graph(sorted, n, {scale, min_size});
    const Partition naive = oracles::segment_graph(edges, n, scale, min_size);
    REQUIRE(fast.labels == naive.labels);
    REQUIRE(fast.num_segments == naive.num_segments);
  }
}

TEST_CASE("color term separates coplanar regions that geometry cannot") {
  // Two half-planes on z=0: left red, right blue. Same surface, two colors.
  const PointCloud cloud = plane_grid(20, 10, 0.05, [](const Vec3& p) {
    return p.x() < 0.5 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
  });

  PrimitiveConfig mixed;  // default w_n=0.96, w_c=0.04
  mixed.min_segment_size = 20;
  const Partition two = instfuse::compute_primitives(cloud, mixed, 10);
  REQUIRE(two.num_segments == 2);
  std::set<int> left_labels, right_labels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.positions[i].x() < 0.5)
      left_labels.insert(two.labels[i]);
    else
      right_labels.insert(two.labels[i]);
  }
  CHECK(left_labels == std::set<int>{0});
  CHECK(right_labels == std::set<int>{1});

  PrimitiveConfig geometry_only = mixed;
  geometry_only.w_c = 0.0;
  const Partition one = instfuse::compute_primitives(cloud, geometry_only, 10);
  CHECK(one.num_segments == 1);
}

TEST_CASE("crease between perpendicular planes separates primitives") {
  // L-shaped surface: a horizontal and a vertical plane meeting along y.
  // Normals are pinned analytically so the crease weight is exactly
  // 0.96 * (1 - 0)/2 = 0.48, far above the merge threshold.
  PointCloud cloud;
  const int n = 15;
  const double step = 0.05;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      cloud.positions.emplace_back((ix + 1) * step, iy * step, 0.0);
      cloud.normals.emplace_back(0, 0, 1);
      cloud.positions.emplace_back(0.0, iy * step, (ix + 1) * step);
      cloud.normals.emplace_back(1, 0, 0);
    }
  cloud.colors.assign(cloud.size(), Vec3(0.5, 0.5, 0.5));

  PrimitiveConfig cfg;
  cfg.min_segment_size = 20;
  const Partition part = instfuse::compute_primitives(cloud, cfg);
  REQUIRE(part.num_segments == 2);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool horizontal = cloud.normals[i].z() > 0.5;
    CHECK(part.labels[i] == (horizontal ? part.labels[0] : part.labels[1]));
  }
}

TEST_CASE("primitive config validation rejects broken settings") {
  PrimitiveConfig cfg;
  cfg.w_n = 0.0;
  cfg.w_c = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PrimitiveConfig{};
  cfg.fzs_k = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PrimitiveConfig{};
  cfg.min_segment_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PrimitiveConfig{};
  cfg.graph_knn = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
