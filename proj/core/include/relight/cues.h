// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "relight/path_tracer.h"

namespace relight {

// The four radiance-cue images for one view, in cue order: diffuse white,
// then specular at roughness 0.05, 0.13, 0.34. All linear HDR at the view
// resolution.
struct CueStack {
  std::array<ImageBuffer, 4> images;

  int width() const { return images[0].width(); }
  int height() const { return images[0].height(); }

  // Packed 12-channel conditioning image: srgb-encoded clamp of the four
  // HDR cues, channel-major per cue.
  ImageBuffer packed_ldr() const;

  void save(const std::string& dir, const std::string& stem) const;
  static CueStack load(const std::string& dir, const std::string& stem);
};

// Renders the cue stack for one view: four path traces of the geometry with
// the fixed cue materials under the target environment. The diffuse cue
// shades with geometric normals; the specular cues with the smoothed set
// (falling back to geometric with a warning when absent). Pixels without
// geometry are black.
CueStack render_cues(const TriangleMesh& mesh, const EnvironmentMap& envmap,
                     const Camera& camera, int spp, uint64_t seed);

}  // namespace relight
