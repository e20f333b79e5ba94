// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/cues.h"

#include <cstdio>

#include "relight/image_io.h"

namespace relight {

ImageBuffer CueStack::packed_ldr() const {
  ImageBuffer packed(width(), height(), 12, Colorspace::kSrgbEncoded);
  for (int p = 0; p < 4; ++p) {
    const ImageBuffer ldr = srgb_encode(images[p]);
    for (int y = 0; y < height(); ++y)
      for (int x = 0; x < width(); ++x)
        for (int c = 0; c < 3; ++c) packed.at(x, y, p * 3 + c) = ldr.at(x, y, c);
  }
  return packed;
}

void CueStack::save(const std::string& dir, const std::string& stem) const {
  for (int p = 0; p < 4; ++p)
    write_pfm(images[p], dir + "/" + stem + "_cue" + std::to_string(p) + ".pfm");
  // Packed form serializes as four stacked RGB planes in one PFM.
  ImageBuffer hdr12(width(), height(), 12, Colorspace::kLinear);
  for (int p = 0; p < 4; ++p)
    for (int y = 0; y < height(); ++y)
      for (int x = 0; x < width(); ++x)
        for (int c = 0; c < 3; ++c) hdr12.at(x, y, p * 3 + c) = images[p].at(x, y, c);
  write_pfm(hdr12, dir + "/" + stem + "_cues12.pfm");
}

CueStack CueStack::load(const std::string& dir, const std::string& stem) {
  CueStack stack;
  for (int p = 0; p < 4; ++p)
    stack.images[p] = read_pfm(dir + "/" + stem + "_cue" + std::to_string(p) + ".pfm");
  return stack;
}

CueStack render_cues(const TriangleMesh& mesh, const EnvironmentMap& envmap,
                     const Camera& camera, int spp, uint64_t seed) {
  CueStack stack;
  if (mesh.empty()) {
    for (auto& img : stack.images)
      img = ImageBuffer(camera.width, camera.height, 3, Colorspace::kLinear);
    return stack;
  }

  const bool smoothed_available = mesh.has_smoothed_normals();
  if (!smoothed_available)
    std::fprintf(stderr,
                 "render_cues: mesh has no smoothed normals; specular cues fall back to the "
                 "geometric set\n");

  const auto materials = cue_materials();
  for (int p = 0; p < 4; ++p) {
    Scene scene;
    scene.add_object(mesh, materials[p]);
    scene.background = Background::kBlack;
    scene.commit();

    RenderOptions opt;
    opt.spp = spp;
    opt.seed = seed;
    // Hybrid shading-normal strategy: no smoothing for the diffuse cue,
    // smoothed normals for the specular cues.
    opt.normals = (p == 0 || !smoothed_available) ? NormalSource::kGeometric
                                                  : NormalSource::kSmoothed;
    stack.images[p] = path_trace(scene, envmap, camera, opt);
  }
  return stack;
}

}  // namespace relight
