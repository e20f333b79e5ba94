// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>

#include "relight/envmap.h"
#include "relight/light_sampler.h"
#include "relight/scene.h"

namespace relight {

enum class NormalSource { kFace, kGeometric, kSmoothed };

struct RenderOptions {
  int spp = 128;
  int max_bounces = 4;
  uint64_t seed = 0;
  bool russian_roulette = true;  // starts at bounce 3, throughput-proportional
  NormalSource normals = NormalSource::kGeometric;
};

struct RenderStats {
  std::atomic<int64_t> non_finite_samples{0};
};

// Unbiased estimator of the rendering equation: next-event estimation
// against the environment via LightSampler plus BSDF sampling, combined
// with balance-heuristic MIS. Each pixel owns an RNG stream keyed by
// (seed, pixel index), so output is independent of worker count and tiling.
ImageBuffer path_trace(const Scene& scene, const EnvironmentMap& envmap, const Camera& camera,
                       const RenderOptions& options, RenderStats* stats = nullptr);

}  // namespace relight
