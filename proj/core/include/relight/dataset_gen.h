// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relight/rng.h"
#include "relight/sample_set.h"

namespace relight {

// One asset for paired-relighting generation. Objects without a material
// get one sampled per the dataset rules: roughness ~ U[0.02, 0.5], diffuse
// color ~ U[0,1]^3, specular/diffuse mix ~ U[0,1].
struct DatasetObject {
  TriangleMesh mesh;
  std::optional<GgxMaterial> material;
  std::string name;
};

struct DatasetConfig {
  int cameras_per_object = 4;
  int lightings_per_camera = 2;
  int width = 128, height = 128;
  float focal_per_pixel = 1.0f;  // focal = focal_per_pixel * width
  int spp = 128;
  int cue_spp = 64;
  float camera_radius_scale = 2.5f;  // times the object bounding radius
  bool render_cue_stacks = true;
};

// Sampled draws for one (object, camera, lighting) cell; exposed so the
// distribution tests can audit them without touching the filesystem.
struct DatasetDraw {
  int object = 0, camera = 0, lighting = 0;
  GgxMaterial material;
  int envmap_index = 0;
  Augmentation augmentation;
};

struct DatasetManifest {
  std::vector<DatasetDraw> draws;
  std::vector<Camera> cameras;  // cameras_per_object per object, flattened
  std::string root;
};

// Appendix-style paired relighting data: per object, #cameras poses uniform
// on a sphere facing the centroid; per camera, #lightings envmaps drawn from
// the pool and augmented; renders plus cue stacks grouped as (same object,
// same camera, two lightings) pairs. Writes
//   obj{j}/cam{c}_light{l}.pfm (+ cue stacks) and dataset.json.
DatasetManifest make_dataset(const std::vector<DatasetObject>& objects,
                             const std::vector<EnvironmentMap>& envmap_pool,
                             const DatasetConfig& config, uint64_t seed,
                             const std::string& out_dir);

// Pose/material/envmap draws only (no rendering); the deterministic core of
// make_dataset, reused by its tests.
DatasetManifest draw_dataset_plan(const std::vector<DatasetObject>& objects, int pool_size,
                                  const DatasetConfig& config, uint64_t seed);

// Material sampling rule for objects that lack one.
GgxMaterial sample_dataset_material(Pcg32& rng);

}  // namespace relight
