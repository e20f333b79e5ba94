// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "relight/math.h"

namespace relight::field {

// Normal-regularizer weights; lambda1..3 scale the three asymmetric
// predicted-normal terms, lambda4 and sigma the smoothness penalty.
struct RegularizerConfig {
  float lambda1 = 1e-3f;
  float lambda2 = 1e-3f;
  float lambda3 = 1e-2f;
  float lambda4 = 0.1f;
  float sigma = 0.01f;
};

struct OptimizerConfig {
  float beta1 = 0.9f;
  float beta2 = 0.99f;
  float eps = 1e-15f;
  float lr_init = 5e-3f;
  float lr_final = 5e-4f;  // log-decayed from lr_init over all steps
  int steps = 2000;
  int warmup_steps = 50;  // cosine-scheduled warmup factor
  int ray_batch = 1 << 10;
  // Dense feature grids take a scaled learning rate; a single global rate
  // either leaves the grids frozen or destabilizes the decoders.
  float grid_lr_multiplier = 20.f;
  uint64_t seed = 0;
  bool deterministic = true;

  static OptimizerConfig desk_scale() { return {}; }
  static OptimizerConfig paper_scale() {
    OptimizerConfig c;
    c.steps = 25000;
    c.warmup_steps = 500;
    c.ray_batch = 1 << 14;
    return c;
  }

  float learning_rate(int step) const {
    const float t = steps > 1 ? static_cast<float>(step) / (steps - 1) : 1.f;
    const float lr = std::exp(std::log(lr_init) * (1.f - t) + std::log(lr_final) * t);
    if (step < warmup_steps && warmup_steps > 0) {
      const float w = 0.5f * (1.f - std::cos(kPi * (step + 1) / warmup_steps));
      return lr * w;
    }
    return lr;
  }
};

struct FieldConfig {
  std::array<int, 2> grid_levels = {64, 128};  // dense feature grid resolutions
  int density_features = 4;                    // per level
  int appearance_features = 4;                 // per level
  int hidden_width = 64;
  int bottleneck_width = 16;
  int normal_hidden = 32;
  int latent_dim = 32;   // 0 disables latent conditioning
  int mod_hidden = 32;
  int sh_bands = 4;      // 16 direction-encoding values
  int coarse_samples = 64;
  int fine_samples = 64;
  float density_scale = 25.f;  // fixed output scale after softplus
  Aabb bounds{Vec3{-1.2f, -1.2f, -1.2f}, Vec3{1.2f, 1.2f, 1.2f}};
  Vec3 background{0.f, 0.f, 0.f};
  // Samples below this volume-rendering weight skip the appearance network
  // (their color contribution is negligible); 0 disables the cutoff, which
  // gradient checks require.
  float appearance_weight_cutoff = 1e-4f;
  // Hard cap on appearance evaluations per ray, keeping the highest-weight
  // samples; 0 disables the cap. Early training has near-uniform weights
  // where the cutoff alone keeps every sample live.
  int appearance_max_live = 24;

  int dir_encoding_dims() const { return sh_bands * sh_bands; }
};

}  // namespace relight::field
