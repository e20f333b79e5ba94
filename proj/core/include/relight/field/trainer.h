// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "relight/field/latent.h"
#include "relight/scalar_grid.h"
#include "relight/field/radiance_field.h"
#include "relight/sample_set.h"

namespace relight::field {

struct TrainView {
  ImageBuffer image;  // linear RGB target
  Camera camera;
};

struct TrainStats {
  std::vector<float> loss_curve;  // per logged step
  int log_every = 50;
  std::function<void(int, float)> on_log;
};

// Stage one: fit density + appearance to the source-lit views with the
// normal regularizers; no latent conditioning (equivalently Z fixed to 0).
RadianceFieldParams fit_geometry(const std::vector<TrainView>& views, const FieldConfig& config,
                                 const OptimizerConfig& opt, const RegularizerConfig& reg,
                                 TrainStats* stats = nullptr);

// Stage two: freeze the geometry side (density grids, density decoder,
// normal head) and fit appearance + modulation head + all latent codes
// Z_{i,s} against the complete N x S sample set. Latent rows initialize to
// zero. latent_dim_override = 0 yields the no-latent ablation; -1 keeps the
// config's dimension.
struct DistillResult {
  RadianceFieldParams params;
  LatentTable latents;
};
DistillResult distill(const RelitSampleSet& samples, const std::vector<Camera>& cameras,
                      const RadianceFieldParams& geometry, const OptimizerConfig& opt,
                      int latent_dim_override = -1, TrainStats* stats = nullptr);

// Render with a selected latent: row >= 0 picks a table row, -1 renders at
// Z = 0 (the inference default).
ImageBuffer render_novel(const RadianceFieldParams& params, const LatentTable* latents,
                         const Camera& camera, int latent_row = -1);

// Bake a density grid from the fitted field for isosurface extraction.
ScalarGrid bake_density_grid(const RadianceFieldParams& params, std::array<int, 3> resolution);

// ---------------------------------------------------------------------------
// Loss/gradient surface for the finite-difference checks.
// ---------------------------------------------------------------------------

enum class LossTerm {
  kReconstruction,
  kNormalTerm1,  // lambda1 w  |sg n - sg n'|^2  (gradient into w only)
  kNormalTerm2,  // lambda2 sg(w) |n - sg n'|^2  (gradient into n only)
  kNormalTerm3,  // lambda3 sg(w) |sg n - n'|^2  (gradient into n' only)
  kSmoothness,   // lambda4 w |n'(x+eps) - n'(x)|^2
  kAll,
};

struct CheckBatch {
  std::vector<Ray> rays;
  std::vector<Vec3> targets;
  uint64_t seed = 0;
  int64_t step = 0;
};

// Loss value with the stop-gradient branches of `term` read from `frozen`
// and the differentiated branches from `live`; fine-sample positions and
// the smoothness perturbations always come from `frozen`. With live ==
// frozen this is the training loss.
double loss_term_value(const RadianceFieldParams& live, const RadianceFieldParams& frozen,
                       const CheckBatch& batch, LossTerm term, const RegularizerConfig& reg);

// Analytic gradient of the same term with respect to every parameter
// (flattened), evaluated at `params`.
std::vector<float> loss_term_gradient(const RadianceFieldParams& params, const CheckBatch& batch,
                                      LossTerm term, const RegularizerConfig& reg);

// Per-step training loss pieces, exposed for convergence tests.
struct LossBreakdown {
  double recon = 0.0, lp = 0.0, ls = 0.0;
  double total() const { return recon + lp + ls; }
};

// Spec-level normal-loss evaluation on explicit ray records.
LossBreakdown normal_losses(std::span<const RaySample> records, const RegularizerConfig& reg);

}  // namespace relight::field
