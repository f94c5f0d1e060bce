// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "instfuse/kdtree.hpp"
#include "instfuse/normals.hpp"
#include "oracles.hpp"

using instfuse::KdTree;
using instfuse::PointCloud;
using instfuse::Vec3;

namespace {

PointCloud cloud_from_positions(std::vector<Vec3> positions) {
  PointCloud cloud;
  cloud.positions = std::move(positions);
  cloud.colors.assign(cloud.positions.size(), Vec3(0.5, 0.5, 0.5));
  return cloud;
}

std::vector<Vec3> random_positions(std::size_t n, unsigned seed, double extent = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-extent, extent);
  std::vector<Vec3> out(n);
  for (Vec3& p : out) p = Vec3(dist(rng), dist(rng), dist(rng));
  return out;
}

}  // namespace

TEST_CASE("knn on collinear points follows distance order") {
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0)};
  KdTree tree(pts);
  CHECK(tree.knn(0, 2) == std::vector<int>{1, 2});
  CHECK(tree.knn(1, 1) == std::vector<int>{0});
}

TEST_CASE("knn matches the exhaustive-sort oracle on random clouds") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const std::vector<Vec3> pts = random_positions(1000, seed);
    KdTree tree(pts);
    for (int q = 0; q < static_cast<int>(pts.size()); ++q)
      REQUIRE(tree.knn(q, 16) == oracles::knn(pts, q, 16));
  }
}

TEST_CASE("knn matches the oracle for small k and clustered duplicates") {
  // Repeated positions force distance ties; order must fall back to index.
  std::vector<Vec3> pts = random_positions(60, 7u);
  for (int i = 0; i < 20; ++i) pts.push_back(pts[static_cast<std::size_t>(i)]);
  KdTree tree(pts);
  for (int q = 0; q < static_cast<int>(pts.size()); ++q)
    for (int k : {1, 2, 5})
      REQUIRE(tree.knn(q, k) == oracles::knn(pts, q, k));
}

TEST_CASE("knn_position can exclude a point and handles k >= N") {
  const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  KdTree tree(pts);
  CHECK(tree.knn_position(Vec3(0.1, 0, 0), 2) == std::vector<int>{0, 1});
  CHECK(tree.knn_position(Vec3(0.1, 0, 0), 2, /*exclude=*/0) == std::vector<int>{1, 2});
  // A position query larger than the cloud returns everything; a point query
  // rejects k outside [1, N-1].
  CHECK(tree.knn_position(Vec3(0.1, 0, 0), 10) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(tree.knn(0, 10), std::invalid_argument);
}

TEST_CASE("normals on an axis-aligned plane are exact") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  std::vector<Vec3> on_z;
  for (int i = 0; i < 100; ++i) on_z.emplace_back(dist(rng), dist(rng), 0.0);
  PointCloud cloud = instfuse::estimate_normals(cloud_from_positions(on_z), 10);
  for (const Vec3& n : cloud.normals) CHECK(n == Vec3(0.0, 0.0, 1.0));

  std::vector<Vec3> on_x;
  for (int i = 0; i < 100; ++i) on_x.emplace_back(5.0, dist(rng), dist(rng));
  cloud = instfuse::estimate_normals(cloud_from_positions(on_x), 10);
  for (const Vec3& n : cloud.normals) CHECK(n == Vec3(1.0, 0.0, 0.0));
}

TEST_CASE("normals on a sphere stay within 10 degrees of radial") {
  // Fibonacci lattice: 200 evenly spread points, so every 12-neighborhood is
  // a nearly symmetric spherical cap.
  std::vector<Vec3> pts;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < 200; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / 200.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    pts.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  const PointCloud cloud = instfuse::estimate_normals(cloud_from_positions(pts), 12);
  const double max_angle = 10.0 * M_PI / 180.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cosine = std::abs(cloud.normals[i].dot(pts[i]));  // radial, up to sign
    CHECK(std::acos(std::min(1.0, cosine)) <= max_angle);
  }
}

TEST_CASE("neighborhood normal ignores id order and degenerate input") {
  const std::vector<Vec3> pts = random_positions(40, 9u);
  std::vector<int> ids = {3, 17, 8, 25, 1, 30, 12, 6, 22, 9};
  const Vec3 base = instfuse::normal_from_neighborhood(pts, ids);
  std::mt19937 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(ids.begin(), ids.end(), rng);
    const Vec3 again = instfuse::normal_from_neighborhood(pts, ids);
    CHECK(again == base);  // bitwise: accumulation order is canonicalized
  }
  // all points coincident -> covariance vanishes -> documented fallback
  const std::vector<Vec3> stacked(10, Vec3(1.0, 2.0, 3.0));
  CHECK(instfuse::normal_from_neighborhood(stacked, {0, 1, 2, 3, 4}) == Vec3(0.0, 0.0, 1.0));
}

TEST_CASE("normal estimation is equivariant under rotation up to sign") {
  const std::vector<Vec3> pts = random_positions(300, 21u);
  const PointCloud plain = instfuse::estimate_normals(cloud_from_positions(pts), 12);

  Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()) * Eigen::AngleAxisd(1.9, Vec3(0, 1, 0)))
          .toRotationMatrix();
  std::vector<Vec3> rotated;
  for (const Vec3& p : pts) rotated.push_back(rot * p);
  const PointCloud turned = instfuse::estimate_normals(cloud_from_positions(rotated), 12);

  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 expect = rot * plain.normals[i];
    const double align = std::abs(expect.dot(turned.normals[i]));
    CHECK(align >= 1.0 - 1e-5);
  }
}

TEST_CASE("normal estimation does not depend on the worker count") {
  const std::vector<Vec3> pts = random_positions(500, 33u);
  const PointCloud serial = instfuse::estimate_normals(cloud_from_positions(pts), 16, 1);
  const PointCloud parallel = instfuse::estimate_normals(cloud_from_positions(pts), 16, 4);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(serial.normals[i] == parallel.normals[i]);
}

TEST_CASE("normal estimation rejects invalid neighborhood sizes") {
  const PointCloud cloud = cloud_from_positions(random_positions(10, 1u));
  CHECK_THROWS_AS(instfuse::estimate_normals(cloud, 2), std::invalid_argument);
  CHECK_THROWS_AS(instfuse::estimate_normals(cloud, 10), std::invalid_argument);
}
