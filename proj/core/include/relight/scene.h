// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "relight/bvh.h"
#include "relight/camera.h"
#include "relight/material.h"

namespace relight {

enum class Background { kBlack, kEnvironment };

// Ground-truth world for the oracle and cue renders: merged mesh, one
// material per object, BVH over everything.
// Copies share the mesh and BVH and deep-copy only materials, so the oracle
// can stamp out material-perturbed variants cheaply.
class Scene {
 public:
  Scene() : mesh_(std::make_shared<TriangleMesh>()) {}

  void add_object(const TriangleMesh& mesh, const GgxMaterial& material);
  // Call after the last add_object; builds the BVH.
  void commit();

  bool committed() const { return bvh_ != nullptr; }
  bool empty() const { return mesh_->empty(); }
  const TriangleMesh& mesh() const { return *mesh_; }
  TriangleMesh& mutable_mesh() { return *mesh_; }
  const Bvh& bvh() const { return *bvh_; }

  int object_count() const { return static_cast<int>(materials_.size()); }
  const GgxMaterial& material(int object) const { return materials_[object]; }
  GgxMaterial& mutable_material(int object) { return materials_[object]; }
  const GgxMaterial& material_of_triangle(uint32_t tri) const {
    return materials_[object_of_triangle_[tri]];
  }

  Background background = Background::kBlack;

 private:
  std::shared_ptr<TriangleMesh> mesh_;
  std::vector<GgxMaterial> materials_;
  std::vector<uint16_t> object_of_triangle_;
  std::shared_ptr<const Bvh> bvh_;
};

// The reference desk-scale scene: a matte box next to a glossy sphere,
// centered near the origin inside a [-1.2, 1.2]^3 region.
Scene make_toy_scene();

// Cameras on a sphere of the given radius looking at the target; poses are
// deterministic in (seed, index).
std::vector<Camera> make_orbit_cameras(int count, const Vec3& target, float radius, float focal,
                                       int width, int height, uint64_t seed);

}  // namespace relight
