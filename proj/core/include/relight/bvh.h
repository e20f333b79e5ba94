// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "relight/mesh.h"

namespace relight {

struct Hit {
  float t = kInfinity;
  uint32_t triangle = 0;
  float bary_u = 0.f, bary_v = 0.f;  // barycentrics of vertices 1 and 2
  Vec3 position;
  Vec3 geometric_normal;  // interpolated, unit, faces the ray origin
  Vec3 smoothed_normal;   // interpolated, unit, same side as geometric
  Vec3 face_normal;       // true triangle normal, unit, faces the ray origin
  bool backface = false;
};

// Watertight-enough Moller-Trumbore triangle test shared by BVH traversal
// and the brute-force oracle so both report bit-identical hits.
std::optional<Hit> intersect_triangle(const TriangleMesh& mesh, uint32_t tri, const Ray& ray,
                                      float t_min, float t_max);

// Binned-SAH bounding volume hierarchy. Immutable after construction;
// intersect is safe for concurrent callers.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(const TriangleMesh& mesh);

  // Nearest hit within (t_min, t_max); ties on t resolve to the smaller
  // triangle id, matching brute force exactly.
  std::optional<Hit> intersect(const Ray& ray, float t_min = 1e-4f,
                               float t_max = kInfinity) const;

  // Any-hit visibility query.
  bool occluded(const Ray& ray, float t_min, float t_max) const;

  const TriangleMesh& mesh() const { return *mesh_; }
  bool empty() const { return nodes_.empty(); }

  struct Node {
    Aabb box;
    uint32_t first = 0;  // child index for inner nodes, first primitive for leaves
    uint16_t count = 0;  // primitive count; 0 marks an inner node
    uint16_t axis = 0;
  };
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  uint32_t build(uint32_t* prims, uint32_t count, const std::vector<Aabb>& prim_boxes,
                 const std::vector<Vec3>& centroids);

  const TriangleMesh* mesh_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<uint32_t> prim_order_;  // triangle ids, leaf-contiguous
};

// Brute-force nearest hit over all triangles; the oracle for BVH tests.
std::optional<Hit> intersect_brute_force(const TriangleMesh& mesh, const Ray& ray,
                                         float t_min = 1e-4f, float t_max = kInfinity);

}  // namespace relight
