// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/scene.h"

#include <stdexcept>

#include "relight/rng.h"

namespace relight {

void Scene::add_object(const TriangleMesh& mesh, const GgxMaterial& material) {
  if (!material.is_valid()) throw std::invalid_argument("scene object material out of range");
  if (bvh_) throw std::logic_error("scene already committed");
  append_mesh(*mesh_, mesh);
  const uint16_t id = static_cast<uint16_t>(materials_.size());
  materials_.push_back(material);
  object_of_triangle_.resize(mesh_->triangles.size(), id);
}

void Scene::commit() {
  if (!mesh_->geometric_normals.size()) mesh_->compute_geometric_normals();
  bvh_ = std::make_shared<const Bvh>(*mesh_);
}

Scene make_toy_scene() {
  Scene scene;

  GgxMaterial glossy;
  glossy.albedo = {0.75f, 0.35f, 0.25f};
  glossy.roughness = 0.22f;
  glossy.specular_mix = 0.45f;
  glossy.f0 = 0.35f;
  scene.add_object(make_uv_sphere({-0.38f, 0.05f, 0.12f}, 0.48f, 24, 48), glossy);

  GgxMaterial matte;
  matte.albedo = {0.30f, 0.45f, 0.70f};
  matte.roughness = 0.8f;
  matte.specular_mix = 0.06f;
  matte.f0 = 0.04f;
  scene.add_object(make_box({0.45f, -0.08f, -0.10f}, {0.33f, 0.40f, 0.30f}), matte);

  smooth_normals(scene.mutable_mesh(), 10, 0.5f);
  scene.commit();
  return scene;
}

std::vector<Camera> make_orbit_cameras(int count, const Vec3& target, float radius, float focal,
                                       int width, int height, uint64_t seed) {
  std::vector<Camera> cams;
  cams.reserve(count);
  Pcg32 rng = make_stream(seed, 0xca3e7aull);
  for (int i = 0; i < count; ++i) {
    // Uniform direction on the sphere.
    const float z = 1.f - 2.f * rng.next_float();
    const float phi = kTwoPi * rng.next_float();
    const float r = std::sqrt(std::max(0.f, 1.f - z * z));
    const Vec3 dir{r * std::cos(phi), z, r * std::sin(phi)};
    const Vec3 eye = target + dir * radius;
    // Keep a usable up vector near the poles.
    const Vec3 up = std::abs(dir.y) > 0.98f ? Vec3{1.f, 0.f, 0.f} : Vec3{0.f, 1.f, 0.f};
    cams.push_back(Camera::look_at(eye, target, up, focal, width, height));
  }
  return cams;
}

}  // namespace relight
