// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared per-ray forward/backward machinery for the radiance field. Private
// to the library; the public surface lives in relight/field/.

#pragma once

#include <cstring>

#include "relight/field/latent.h"
#include "relight/field/radiance_field.h"

namespace relight::field::internal {

constexpr int kMaxFeatures = 8;   // per level
constexpr int kLevels = 2;

// Trilinear cell cache: 8 corner flat offsets (in feature units) and weights,
// plus the per-axis weight gradients for density normals.
struct CornerCache {
  uint32_t corner[8];  // value index = (tensor offset) + corner * F + k
  float weight[8];
  float dwdx[8], dwdy[8], dwdz[8];  // d(weight)/d(position), world units
};

struct SampleCache {
  float t = 0.f, delta = 0.f;
  Vec3 position;
  CornerCache cells[kLevels];  // shared by density and appearance grids
  // Density path.
  float fd[kLevels * kMaxFeatures];
  float u = 0.f;          // pre-softplus
  float sigma = 0.f;
  float alpha = 0.f, transmittance = 0.f, weight = 0.f;
  // Appearance path (live samples only).
  bool live = false;
  float fa[kLevels * kMaxFeatures];
  std::vector<float> h1, h2, bottleneck, modulated, head_h, rgb_pre;
  Vec3 color;
  // Normals.
  Vec3 grad_u;            // spatial gradient of u
  Vec3 density_normal;
  std::vector<float> nh;  // normal-MLP hidden
  Vec3 pred_raw;          // pre-normalize
  Vec3 pred_normal;
  // Smoothness-loss evaluation at position + eps.
  Vec3 eps;
  CornerCache cells_p[kLevels];
  float fd_p[kLevels * kMaxFeatures];
  std::vector<float> nh_p;
  Vec3 pred_raw_p;
  Vec3 pred_normal_p;
};

struct RayForward {
  bool valid = false;       // ray intersects the bounds
  float t_enter = 0.f, t_exit = 0.f;
  std::vector<float> coarse_ts;      // n_c stratified ts
  std::vector<float> coarse_sigma;   // coarse-level density
  std::vector<float> fine_ts;
  std::vector<SampleCache> samples;  // fine pass
  Vec3 color;               // composited
  float weight_sum = 0.f;
  float bg_weight = 1.f;
  // Modulation cache (one latent per ray).
  std::vector<float> mod_hidden, mod_out;  // tanh hidden, [scale_raw; shift]
  std::vector<float> sh;    // direction encoding
};

// Gradient sink for one ray. Grid entries are (flat value index, value)
// appended in a deterministic traversal order; dense covers every parameter
// past the grid region; latent is the single active row's gradient.
struct GradSink {
  std::vector<std::pair<uint32_t, float>> grid;
  std::vector<float> dense;  // size = params.values().size() - grid_region_end
  std::vector<float> latent;
  std::vector<float> mod_w1, mod_w2;
  void clear(size_t dense_size, int latent_dim, size_t mod_w1_size, size_t mod_w2_size) {
    grid.clear();
    dense.assign(dense_size, 0.f);
    latent.assign(latent_dim, 0.f);
    mod_w1.assign(mod_w1_size, 0.f);
    mod_w2.assign(mod_w2_size, 0.f);
  }
};

// Offsets of the named tensors, resolved once per params instance.
struct ParamLayout {
  size_t density_grid[kLevels], appearance_grid[kLevels];
  size_t density_w, density_b;
  size_t app_w1, app_b1, app_w2, app_b2, app_w3, app_b3;
  size_t head_w1, head_b1, head_w2, head_b2;
  size_t normal_w1, normal_b1, normal_w2, normal_b2;
  size_t grid_region_end = 0;  // all grid tensors precede this offset
  int grid_res[kLevels];

  static ParamLayout resolve(const RadianceFieldParams& params);
};

// Frozen-geometry ray: live fine samples with their volume-rendering
// weights, baked once after the geometry stage so distillation renders
// appearance only.
struct CachedRay {
  std::vector<float> ts;
  std::vector<float> weights;
  float bg_weight = 1.f;
};

struct ForwardOptions {
  bool want_appearance = true;
  bool compute_normals = false;
  float sigma_perturb = 0.f;
  float weight_cutoff = 0.f;
  int max_live = 0;  // top-K cap on appearance samples; 0 = uncapped
  bool jitter = true;
  uint64_t seed = 0;
  int64_t step = 0;
  const std::vector<float>* frozen_fine_ts = nullptr;
  const CachedRay* cached = nullptr;  // skips the density path entirely
};

// Low-level field evaluation helpers shared with the trainer.
void make_corner_cache(const Aabb& bounds, int res, const Vec3& pos, CornerCache& cc);
void gather_features(const float* values, size_t tensor_offset, const CornerCache& cc, int f_dim,
                     float* out);
float density_u(const RadianceFieldParams& params, const ParamLayout& layout,
                const SampleCache& sc, bool coarse_only);

// Forward pass for one ray; fills `fwd` (reused across calls to avoid
// allocation churn).
void forward_ray(const RadianceFieldParams& params, const ParamLayout& layout,
                 const LatentTable* latents, int latent_row, const Ray& ray, int64_t ray_id,
                 const ForwardOptions& opt, RayForward& fwd);

// Backward pass of (reconstruction + normal losses) for one ray, writing
// parameter gradients into `sink` and, when latents are active, the latent
// row gradient. d_color is dL/dC for this ray; reg enables the normal terms.
struct BackwardLossSpec {
  Vec3 d_color;                      // dL/dC; zero when recon is off
  const RegularizerConfig* reg = nullptr;  // required by the normal terms
  bool recon = true;
  bool term1 = false, term2 = false, term3 = false, smooth = false;
  bool geometry_params = true;       // propagate into density/normal params
  bool appearance_params = true;     // propagate into appearance/head params
  float loss_scale = 1.f;            // applied to the normal-loss terms
};

void backward_ray(const RadianceFieldParams& params, const ParamLayout& layout,
                  const LatentTable* latents, int latent_row, const Ray& ray,
                  const RayForward& fwd, const BackwardLossSpec& spec, GradSink& sink);

// Normal-loss values for one forward ray (term1..3 of the asymmetric
// predicted-normal loss and the smoothness term), summed over samples.
struct NormalLossValues {
  double lp = 0.0;
  double ls = 0.0;
};
NormalLossValues normal_loss_values(const RayForward& fwd, const RegularizerConfig& reg);

}  // namespace relight::field::internal
