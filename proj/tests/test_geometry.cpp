// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "relight/bvh.h"
#include "relight/marching_cubes.h"
#include "relight/rng.h"

namespace relight {
namespace {

namespace fs = std::filesystem;

ScalarGrid sphere_sdf(int res, float radius) {
  Aabb bounds;
  bounds.lo = {-1.f, -1.f, -1.f};
  bounds.hi = {1.f, 1.f, 1.f};
  return ScalarGrid::from_function({res, res, res}, bounds,
                                   [radius](const Vec3& p) { return length(p) - radius; });
}

TEST(MarchingCubes, SphereVerticesWithinVoxelDiagonal) {
  const ScalarGrid grid = sphere_sdf(64, 0.5f);
  const TriangleMesh mesh = marching_cubes(grid, 0.f);
  ASSERT_FALSE(mesh.empty());
  const float diag = length(grid.voxel_extent());
  for (const Vec3& v : mesh.vertices) EXPECT_LT(std::abs(length(v) - 0.5f), diag);
  // Outward orientation: normals along the radial direction.
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    EXPECT_GT(dot(normalize(mesh.vertices[i]), mesh.geometric_normals[i]), 0.9f);
}

TEST(MarchingCubes, AllPositiveGridIsEmpty) {
  Aabb bounds;
  bounds.lo = {-1.f, -1.f, -1.f};
  bounds.hi = {1.f, 1.f, 1.f};
  const ScalarGrid grid =
      ScalarGrid::from_function({16, 16, 16}, bounds, [](const Vec3&) { return 1.f; });
  EXPECT_TRUE(marching_cubes(grid, 0.f).empty());
}

TEST(MarchingCubes, HalfSpaceIsPlanar) {
  Aabb bounds;
  bounds.lo = {-1.f, -1.f, -1.f};
  bounds.hi = {1.f, 1.f, 1.f};
  const float plane_z = 0.25f;
  const ScalarGrid grid = ScalarGrid::from_function(
      {33, 33, 33}, bounds, [plane_z](const Vec3& p) { return p.z - plane_z; });
  const TriangleMesh mesh = marching_cubes(grid, 0.f);
  ASSERT_FALSE(mesh.empty());
  for (const Vec3& v : mesh.vertices) EXPECT_NEAR(v.z, plane_z, 1e-6f);
}

TEST(MarchingCubes, CellLocalContainment) {
  const ScalarGrid grid = sphere_sdf(16, 0.6f);
  const TriangleMesh mesh = marching_cubes(grid, 0.f);
  const Vec3 vox = grid.voxel_extent();
  for (const auto& tri : mesh.triangles) {
    Aabb box;
    for (const uint32_t vi : tri) box.expand(mesh.vertices[vi]);
    const Vec3 e = box.extent();
    // No triangle spans more than one cell in any axis.
    EXPECT_LE(e.x, vox.x + 1e-5f);
    EXPECT_LE(e.y, vox.y + 1e-5f);
    EXPECT_LE(e.z, vox.z + 1e-5f);
  }
}

TEST(ExtractLevelSet, DensityIndicatorSphere) {
  Aabb bounds;
  bounds.lo = {-1.f, -1.f, -1.f};
  bounds.hi = {1.f, 1.f, 1.f};
  const ScalarGrid density = ScalarGrid::from_function(
      {64, 64, 64}, bounds, [](const Vec3& p) { return length(p) < 0.5f ? 100.f : 0.f; });
  const TriangleMesh mesh = extract_level_set(density, 50.f);
  ASSERT_FALSE(mesh.empty());
  const float diag = length(density.voxel_extent());
  for (const Vec3& v : mesh.vertices) EXPECT_LT(std::abs(length(v) - 0.5f), diag);
  // Normals point toward decreasing density (outward).
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    EXPECT_GT(dot(normalize(mesh.vertices[i]), mesh.geometric_normals[i]), 0.5f);
}

TEST(ExtractLevelSet, IsoAboveMaxIsEmpty) {
  Aabb bounds;
  bounds.lo = {-1.f, -1.f, -1.f};
  bounds.hi = {1.f, 1.f, 1.f};
  const ScalarGrid density =
      ScalarGrid::from_function({8, 8, 8}, bounds, [](const Vec3&) { return 1.f; });
  EXPECT_TRUE(extract_level_set(density, 10.f).empty());
}

TEST(SmoothNormals, ZeroIterationsIsIdentity) {
  TriangleMesh mesh = make_icosphere(1.f, 2);
  smooth_normals(mesh, 0, 0.5f);
  ASSERT_EQ(mesh.smoothed_normals.size(), mesh.geometric_normals.size());
  for (size_t i = 0; i < mesh.geometric_normals.size(); ++i)
    EXPECT_EQ(mesh.smoothed_normals[i], mesh.geometric_normals[i]);
}

TEST(SmoothNormals, IcosphereStaysRadial) {
  TriangleMesh mesh = make_icosphere(1.f, 3);
  smooth_normals(mesh, 10, 0.5f);
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const float angle = degrees(
        std::acos(clamp(dot(normalize(mesh.vertices[i]), mesh.smoothed_normals[i]), -1.f, 1.f)));
    EXPECT_LT(angle, 2.f);
  }
}

TEST(SmoothNormals, FlatGridIsFixedPoint) {
  // Regular grid mesh in the z = 0 plane.
  TriangleMesh mesh;
  const int n = 6;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) mesh.vertices.push_back({x * 0.2f, y * 0.2f, 0.f});
  for (int y = 0; y + 1 < n; ++y)
    for (int x = 0; x + 1 < n; ++x) {
      const uint32_t a = y * n + x, b = y * n + x + 1, c = (y + 1) * n + x, d = (y + 1) * n + x + 1;
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({b, d, c});
    }
  mesh.compute_geometric_normals();
  smooth_normals(mesh, 25, 0.5f);
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    EXPECT_NEAR(std::abs(mesh.smoothed_normals[i].z), 1.f, 1e-6f);
}

TEST(SmoothNormals, ConvexDeviationNeverGrows) {
  TriangleMesh mesh = make_icosphere(1.f, 2);
  auto max_deviation = [&](const std::vector<Vec3>& normals) {
    float worst = 0.f;
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
      worst = std::max(worst,
                       std::acos(clamp(dot(normalize(mesh.vertices[i]), normals[i]), -1.f, 1.f)));
    return worst;
  };
  const float before = max_deviation(mesh.geometric_normals);
  smooth_normals(mesh, 15, 0.5f);
  EXPECT_LE(max_deviation(mesh.smoothed_normals), before + 1e-5f);
}

TEST(Bvh, SphereCenterRayDistance) {
  const TriangleMesh mesh = make_uv_sphere({0.f, 0.f, 0.f}, 0.5f, 48, 96);
  const Bvh bvh(mesh);
  const Ray ray{{2.f, 0.f, 0.f}, {-1.f, 0.f, 0.f}};
  const auto hit = bvh.intersect(ray);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 1.5f, 1e-3f);
}

TEST(Bvh, MissIsLegal) {
  const TriangleMesh mesh = make_box({0.f, 0.f, 0.f}, {0.5f, 0.5f, 0.5f});
  const Bvh bvh(mesh);
  EXPECT_FALSE(bvh.intersect({{2.f, 2.f, 2.f}, normalize(Vec3{1.f, 0.2f, 0.1f})}).has_value());
}

TEST(Bvh, MatchesBruteForceExactly) {
  TriangleMesh mesh = make_uv_sphere({0.2f, -0.1f, 0.3f}, 0.6f, 20, 40);
  append_mesh(mesh, make_box({-0.5f, 0.2f, -0.2f}, {0.3f, 0.25f, 0.35f}));
  append_mesh(mesh, make_icosphere(0.25f, 2));
  const Bvh bvh(mesh);

  Pcg32 rng = make_stream(17, 0);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 origin{rng.next_float() * 4.f - 2.f, rng.next_float() * 4.f - 2.f,
                      rng.next_float() * 4.f - 2.f};
    const Vec3 dir = normalize(Vec3{rng.next_float() * 2.f - 1.f, rng.next_float() * 2.f - 1.f,
                                    rng.next_float() * 2.f - 1.f});
    const Ray ray{origin, dir};
    const auto a = bvh.intersect(ray);
    const auto b = intersect_brute_force(mesh, ray);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    ++hits;
    EXPECT_EQ(a->t, b->t);
    EXPECT_EQ(a->triangle, b->triangle);
    EXPECT_EQ(a->bary_u, b->bary_u);
  }
  EXPECT_GT(hits, 50);
}

TEST(Bvh, BackfaceNormalFlipsTowardOrigin) {
  const TriangleMesh mesh = make_uv_sphere({0.f, 0.f, 0.f}, 0.5f, 16, 32);
  const Bvh bvh(mesh);
  // Ray from inside the sphere: the hit is a backface.
  const auto hit = bvh.intersect({{0.f, 0.f, 0.f}, {1.f, 0.f, 0.f}});
  ASSERT_TRUE(hit.has_value());
  EXPECT_TRUE(hit->backface);
  EXPECT_LT(dot(hit->geometric_normal, Vec3{1.f, 0.f, 0.f}), 0.f);
}

TEST(Bvh, NodesContainChildren) {
  const TriangleMesh mesh = make_uv_sphere({0.f, 0.f, 0.f}, 0.7f, 12, 24);
  const Bvh bvh(mesh);
  const auto& nodes = bvh.nodes();
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].count > 0) continue;
    for (const uint32_t child : {static_cast<uint32_t>(i + 1), nodes[i].first}) {
      for (int a = 0; a < 3; ++a) {
        EXPECT_LE(nodes[i].box.lo[a], nodes[child].box.lo[a] + 1e-6f);
        EXPECT_GE(nodes[i].box.hi[a], nodes[child].box.hi[a] - 1e-6f);
      }
    }
  }
}

TEST(MeshIo, ObjRoundTripKeepsGeometryAndNormals) {
  TriangleMesh mesh = make_icosphere(0.8f, 2);
  smooth_normals(mesh, 5, 0.5f);
  const std::string path =
      (fs::temp_directory_path() / "relight_geometry_roundtrip.obj").string();
  save_obj(mesh, path);
  const TriangleMesh back = load_obj(path);
  ASSERT_EQ(back.vertices.size(), mesh.vertices.size());
  ASSERT_EQ(back.triangles.size(), mesh.triangles.size());
  ASSERT_TRUE(back.has_smoothed_normals());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    EXPECT_NEAR(length(back.vertices[i] - mesh.vertices[i]), 0.f, 1e-6f);
    EXPECT_NEAR(dot(back.smoothed_normals[i], mesh.smoothed_normals[i]), 1.f, 1e-5f);
  }
}

TEST(GridIo, RawRoundTrip) {
  const ScalarGrid grid = sphere_sdf(12, 0.4f);
  const std::string path = (fs::temp_directory_path() / "relight_grid_roundtrip.raw").string();
  grid.save(path);
  const ScalarGrid back = ScalarGrid::load(path);
  ASSERT_EQ(back.resolution(), grid.resolution());
  for (size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(back.data()[i], grid.data()[i]);
}

}  // namespace
}  // namespace relight
