// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "relight/math.h"

namespace relight {

// Indexed triangle mesh with two per-vertex normal sets: geometric normals
// (area-weighted face average) and an optional smoothed set used as shading
// normals for the specular cue materials.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;
  std::vector<Vec3> geometric_normals;  // per vertex, unit
  std::vector<Vec3> smoothed_normals;   // per vertex, unit; may be empty

  bool empty() const { return triangles.empty(); }
  bool has_smoothed_normals() const { return !smoothed_normals.empty(); }
  Aabb bounds() const;

  // Recomputes geometric normals from area-weighted face normals.
  void compute_geometric_normals();

  // Drops triangles with area below the tolerance and unreferenced vertices.
  void remove_degenerate_triangles(float area_tol = 1e-12f);
};

// Iterative umbrella-operator smoothing over vertex one-rings with uniform
// weights: n <- normalize((1-w)*n + w*mean(one-ring)), repeated. Isolated
// vertices keep their input normal. Writes mesh.smoothed_normals; the
// geometric set is untouched.
void smooth_normals(TriangleMesh& mesh, int iterations, float weight);

// OBJ with v/vn/f records. The vn set is the smoothed set when present,
// else the geometric set; geometric normals are recomputed on load.
void save_obj(const TriangleMesh& mesh, const std::string& path);
TriangleMesh load_obj(const std::string& path);

// Analytic test/reference shapes.
TriangleMesh make_uv_sphere(const Vec3& center, float radius, int stacks = 32, int slices = 64);
TriangleMesh make_box(const Vec3& center, const Vec3& half_extent);
TriangleMesh make_icosphere(float radius, int subdivisions);
void append_mesh(TriangleMesh& dst, const TriangleMesh& src);

}  // namespace relight
