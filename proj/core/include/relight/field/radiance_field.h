// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "relight/camera.h"
#include "relight/field/field_config.h"
#include "relight/image.h"
#include "relight/rng.h"

namespace relight::field {

struct TensorView {
  std::string name;
  size_t offset = 0;
  std::vector<int> shape;
  size_t size = 0;
};

// All learnable parameters in one flat float32 block: density and appearance
// feature grids (two dense levels, trilinear), the density affine decoder,
// the appearance MLP with its bottleneck head, the color head, and the
// predicted-normal MLP. Geometry (density path) never sees the latent code.
class RadianceFieldParams {
 public:
  RadianceFieldParams() = default;
  explicit RadianceFieldParams(const FieldConfig& config, uint64_t init_seed = 1);

  const FieldConfig& config() const { return config_; }
  const std::vector<TensorView>& tensors() const { return tensors_; }
  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  std::span<float> tensor(const std::string& name);
  std::span<const float> tensor(const std::string& name) const;
  const TensorView& view(const std::string& name) const;

  // Flat index ranges of the geometry-side parameters (density grids,
  // density decoder, normal MLP); frozen during distillation.
  bool is_geometry_param(size_t flat_index) const;
  // Appearance grid + decoder + color-head parameters.
  bool is_appearance_param(size_t flat_index) const;

  bool all_finite() const;

 private:
  void add_tensor(const std::string& name, std::vector<int> shape);

  FieldConfig config_;
  std::vector<TensorView> tensors_;
  std::vector<float> values_;
};

// Per-sample record of one rendered ray (the fine pass).
struct RaySample {
  float t = 0.f;
  float delta = 0.f;
  Vec3 position;
  float sigma = 0.f;
  float alpha = 0.f;
  float weight = 0.f;           // omega_i = T_i * alpha_i
  Vec3 density_normal;          // -normalized density gradient
  Vec3 pred_normal;             // normal-MLP output, unit
  Vec3 pred_normal_perturbed;   // at position + eps, for the smoothness loss
  Vec3 color;
  bool appearance_live = false;
};

struct RayResult {
  Vec3 color;
  float weight_sum = 0.f;  // sum of omega_i (opacity)
  std::vector<RaySample> samples;
};

// Evaluation context: sampling jitter derives from (seed, step, ray_id), so
// renders are reproducible and worker-count independent. When
// frozen_fine_ts is set the proposal round is skipped and those fine sample
// positions are used as-is (gradient checks differentiate at fixed
// positions, matching the stop-gradient through resampling).
struct RenderContext {
  uint64_t seed = 0;
  int64_t step = 0;
  bool jitter = true;               // stratified jitter vs midpoint sampling
  bool want_records = false;        // keep per-sample records
  bool compute_normals = false;     // fill density/predicted normals
  float sigma_perturb = 0.f;        // smoothness-loss perturbation scale
  const std::vector<float>* frozen_fine_ts = nullptr;
};

class LatentTable;

// Renders one ray through the field, conditioned on latent table row
// `latent_row` (-1 or a null table renders at Z = 0, which modulates the
// bottleneck by exactly the identity). The density path ignores the latent.
RayResult render_ray(const RadianceFieldParams& params, const LatentTable* latents,
                     int latent_row, const Ray& ray, int64_t ray_id, const RenderContext& ctx);

// Full-image render at pixel centers, parallel over rows.
ImageBuffer render_image(const RadianceFieldParams& params, const LatentTable* latents,
                         int latent_row, const Camera& camera, uint64_t seed = 0);

// Real spherical-harmonics direction encoding, bands^2 values.
void sh_encode(const Vec3& dir, int bands, float* out);

}  // namespace relight::field
