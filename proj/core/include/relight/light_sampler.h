// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "relight/envmap.h"

namespace relight {

struct LightSample {
  Vec3 dir;       // unit, toward the light
  Vec3 radiance;  // texel radiance along dir
  float pdf = 0.f;  // solid-angle measure
};

// Tabulated importance sampler over environment texels, weighted by
// luminance * sin(theta). Immutable after construction; shareable across
// render workers.
class LightSampler {
 public:
  explicit LightSampler(const EnvironmentMap& map);

  // Maps (u1, u2) in [0,1)^2 to a direction with pdf proportional to the
  // texel weight over solid angle. The returned radiance is the sampled
  // texel's value, consistent with the tabulated pdf.
  LightSample sample(float u1, float u2) const;

  // pdf (solid-angle) of sampling the texel containing dir; used for MIS.
  float pdf(const Vec3& dir) const;

  float total_flux() const { return total_flux_; }

 private:
  const EnvironmentMap* map_;
  int width_ = 0, height_ = 0;
  std::vector<float> marginal_cdf_;             // over rows, size H
  std::vector<float> conditional_cdf_;          // per row over columns, H*W
  std::vector<float> pdf_;                      // solid-angle pdf per texel, H*W
  float total_flux_ = 0.f;
};

}  // namespace relight
