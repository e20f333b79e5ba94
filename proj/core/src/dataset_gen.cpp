// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/dataset_gen.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "relight/image_io.h"
#include "relight/rng.h"

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

GgxMaterial sample_dataset_material(Pcg32& rng) {
  GgxMaterial m;
  m.roughness = 0.02f + rng.next_float() * (0.5f - 0.02f);
  m.albedo = {rng.next_float(), rng.next_float(), rng.next_float()};
  m.specular_mix = rng.next_float();
  m.f0 = 0.5f;  // fixed; the dataset rules only sample the three above
  return m;
}

DatasetManifest draw_dataset_plan(const std::vector<DatasetObject>& objects, int pool_size,
                                  const DatasetConfig& config, uint64_t seed) {
  if (pool_size < 1) throw std::invalid_argument("make_dataset: empty envmap pool");
  DatasetManifest manifest;
  for (size_t j = 0; j < objects.size(); ++j) {
    const Aabb box = objects[j].mesh.bounds();
    const Vec3 center = box.center();
    const float radius = 0.5f * length(box.extent());

    Pcg32 rng = make_stream(seed, 0xda7a5e7ull, static_cast<uint64_t>(j));
    const GgxMaterial material =
        objects[j].material.has_value() ? *objects[j].material : sample_dataset_material(rng);

    for (int c = 0; c < config.cameras_per_object; ++c) {
      // Uniform pose on the full sphere, facing the centroid.
      const float z = 1.f - 2.f * rng.next_float();
      const float phi = kTwoPi * rng.next_float();
      const float r = std::sqrt(std::max(0.f, 1.f - z * z));
      const Vec3 dir{r * std::cos(phi), z, r * std::sin(phi)};
      const Vec3 eye = center + dir * (config.camera_radius_scale * radius);
      const Vec3 up = std::abs(dir.y) > 0.98f ? Vec3{1.f, 0.f, 0.f} : Vec3{0.f, 1.f, 0.f};
      manifest.cameras.push_back(Camera::look_at(eye, center, up,
                                                 config.focal_per_pixel * config.width,
                                                 config.width, config.height));

      for (int l = 0; l < config.lightings_per_camera; ++l) {
        DatasetDraw draw;
        draw.object = static_cast<int>(j);
        draw.camera = c;
        draw.lighting = l;
        draw.material = material;
        draw.envmap_index = static_cast<int>(rng.next_u32(static_cast<uint32_t>(pool_size)));
        draw.augmentation = draw_augmentation(/*map_width=*/0x10000, rng.next_u32());
        manifest.draws.push_back(draw);
      }
    }
  }
  return manifest;
}

DatasetManifest make_dataset(const std::vector<DatasetObject>& objects,
                             const std::vector<EnvironmentMap>& envmap_pool,
                             const DatasetConfig& config, uint64_t seed,
                             const std::string& out_dir) {
  DatasetManifest manifest =
      draw_dataset_plan(objects, static_cast<int>(envmap_pool.size()), config, seed);
  manifest.root = out_dir;
  fs::create_directories(out_dir);

  json index = json::array();
  for (const DatasetDraw& draw : manifest.draws) {
    const DatasetObject& obj = objects[draw.object];
    const Camera& cam =
        manifest.cameras[draw.object * config.cameras_per_object + draw.camera];

    // Re-draw the augmentation against the actual map width.
    const EnvironmentMap& base = envmap_pool[draw.envmap_index];
    Augmentation aug = draw.augmentation;
    aug.horizontal_shift %= base.width();
    const EnvironmentMap lit = apply_augmentation(base, aug);

    Scene scene;
    scene.add_object(obj.mesh, draw.material);
    scene.background = Background::kBlack;
    scene.commit();

    RenderOptions opt;
    opt.spp = config.spp;
    opt.seed = hash_combine(seed, manifest.draws.size() + draw.object * 977 + draw.camera * 31 +
                                      draw.lighting);
    const ImageBuffer render = path_trace(scene, lit, cam, opt);

    const std::string obj_dir = out_dir + "/obj" + std::to_string(draw.object);
    fs::create_directories(obj_dir);
    const std::string stem =
        "cam" + std::to_string(draw.camera) + "_light" + std::to_string(draw.lighting);
    write_pfm(render, obj_dir + "/" + stem + ".pfm");

    if (config.render_cue_stacks) {
      TriangleMesh cue_mesh = obj.mesh;
      if (!cue_mesh.has_smoothed_normals()) smooth_normals(cue_mesh, 20, 0.5f);
      const CueStack cues = render_cues(cue_mesh, lit, cam, config.cue_spp, opt.seed ^ 0xc0e5ull);
      cues.save(obj_dir, stem);
    }

    index.push_back({{"object", draw.object},
                     {"camera", draw.camera},
                     {"lighting", draw.lighting},
                     {"envmap_index", draw.envmap_index},
                     {"image", "obj" + std::to_string(draw.object) + "/" + stem + ".pfm"}});
  }

  json top = {{"seed", seed},
              {"cameras_per_object", config.cameras_per_object},
              {"lightings_per_camera", config.lightings_per_camera},
              {"resolution", {config.width, config.height}},
              {"renders", index}};
  std::ofstream f(out_dir + "/dataset.json", std::ios::binary);
  if (!f) throw std::runtime_error(out_dir + "/dataset.json: cannot open for writing");
  f << top.dump(2);
  return manifest;
}

}  // namespace relight
