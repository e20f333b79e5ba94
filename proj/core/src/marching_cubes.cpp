// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/marching_cubes.h"

#include <cstdint>
#include <unordered_map>

#include "relight/parallel.h"

namespace relight {

#include "marching_cubes_tables.inc"

namespace {

// Bourke corner order: bottom quad (z), then top quad (z+1).
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct SlabOutput {
  std::vector<uint64_t> edge_keys;  // one per emitted vertex, slab-local order
  std::vector<Vec3> positions;
  std::vector<std::array<uint32_t, 3>> triangles;  // indices into slab-local vertices
};

// Canonical key for the grid edge between two nodes: lower node index * 3 + axis.
uint64_t edge_key(const ScalarGrid& grid, int x0, int y0, int z0, int x1, int y1, int z1) {
  if (std::tie(z1, y1, x1) < std::tie(z0, y0, x0)) {
    std::swap(x0, x1);
    std::swap(y0, y1);
    std::swap(z0, z1);
  }
  const auto& r = grid.resolution();
  const uint64_t node = (static_cast<uint64_t>(z0) * r[1] + y0) * r[0] + x0;
  const int axis = x1 != x0 ? 0 : (y1 != y0 ? 1 : 2);
  return node * 3 + axis;
}

void polygonize_layer(const ScalarGrid& grid, float iso, int z, SlabOutput& out) {
  const auto& r = grid.resolution();
  std::unordered_map<uint64_t, uint32_t> local;
  float value[8];
  int cx[8], cy[8], cz[8];

  for (int y = 0; y < r[1] - 1; ++y) {
    for (int x = 0; x < r[0] - 1; ++x) {
      int cube = 0;
      for (int c = 0; c < 8; ++c) {
        cx[c] = x + kCornerOffset[c][0];
        cy[c] = y + kCornerOffset[c][1];
        cz[c] = z + kCornerOffset[c][2];
        value[c] = grid.at(cx[c], cy[c], cz[c]);
        if (value[c] < iso) cube |= 1 << c;
      }
      const uint16_t edges = kEdgeTable[cube];
      if (edges == 0) continue;

      uint32_t edge_vertex[12];
      for (int e = 0; e < 12; ++e) {
        if (!(edges & (1 << e))) continue;
        const int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
        const uint64_t key = edge_key(grid, cx[a], cy[a], cz[a], cx[b], cy[b], cz[b]);
        const auto it = local.find(key);
        if (it != local.end()) {
          edge_vertex[e] = it->second;
          continue;
        }
        const float denom = value[b] - value[a];
        const float t = denom == 0.f ? 0.5f : clamp((iso - value[a]) / denom, 0.f, 1.f);
        const Vec3 pa = grid.node_position(cx[a], cy[a], cz[a]);
        const Vec3 pb = grid.node_position(cx[b], cy[b], cz[b]);
        const uint32_t id = static_cast<uint32_t>(out.positions.size());
        out.positions.push_back(lerp(pa, pb, t));
        out.edge_keys.push_back(key);
        local.emplace(key, id);
        edge_vertex[e] = id;
      }

      // Winding flipped versus the Bourke tabulation so geometric normals
      // point toward increasing field values (outward for an SDF).
      const int8_t* tri = kTriTable[cube];
      for (int i = 0; tri[i] != -1; i += 3)
        out.triangles.push_back({edge_vertex[tri[i]], edge_vertex[tri[i + 2]],
                                 edge_vertex[tri[i + 1]]});
    }
  }
}

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, float iso) {
  const auto& r = grid.resolution();
  const int layers = r[2] - 1;
  std::vector<SlabOutput> slabs(layers);
  parallel_for_each(0, layers, [&](int64_t z) {
    polygonize_layer(grid, iso, static_cast<int>(z), slabs[z]);
  });

  // Merge slab-major; boundary edges shared between adjacent layers weld here.
  TriangleMesh mesh;
  std::unordered_map<uint64_t, uint32_t> global;
  for (const SlabOutput& slab : slabs) {
    std::vector<uint32_t> remap(slab.positions.size());
    for (size_t i = 0; i < slab.positions.size(); ++i) {
      const auto it = global.find(slab.edge_keys[i]);
      if (it != global.end()) {
        remap[i] = it->second;
      } else {
        remap[i] = static_cast<uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(slab.positions[i]);
        global.emplace(slab.edge_keys[i], remap[i]);
      }
    }
    for (const auto& tri : slab.triangles)
      mesh.triangles.push_back({remap[tri[0]], remap[tri[1]], remap[tri[2]]});
  }

  mesh.remove_degenerate_triangles();
  mesh.compute_geometric_normals();
  return mesh;
}

TriangleMesh extract_level_set(const ScalarGrid& density, float iso) {
  ScalarGrid flipped(density.resolution(), density.bounds());
  for (size_t i = 0; i < density.size(); ++i) flipped.data()[i] = iso - density.data()[i];
  return marching_cubes(flipped, 0.f);
}

}  // namespace relight
