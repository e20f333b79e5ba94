// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relight/cues.h"

namespace relight {

enum class SampleProvenance { kOracle, kImported };

// One provider request: relight view i under the target environment and
// return S plausible relit images.
struct SampleRequest {
  int view_id = 0;
  const ImageBuffer* input_image = nullptr;  // I_i under the source lighting
  const CueStack* cues = nullptr;            // conditioning under the target light
  std::string envmap_id;
  int sample_count = 1;  // S >= 1
  uint64_t seed = 0;
};

// N views x S samples of relit images. Entry (i, s) carries the latent tag
// that later indexes the distillation latent table.
class RelitSampleSet {
 public:
  RelitSampleSet() = default;
  RelitSampleSet(int num_views, int samples_per_view, SampleProvenance provenance);

  int num_views() const { return num_views_; }
  int samples_per_view() const { return samples_per_view_; }
  SampleProvenance provenance() const { return provenance_; }
  const std::string& envmap_id() const { return envmap_id_; }
  void set_envmap_id(std::string id) { envmap_id_ = std::move(id); }

  // Latent-tag bijection: (i, s) <-> table row.
  int row_of(int view, int sample) const { return view * samples_per_view_ + sample; }
  std::pair<int, int> tag_of_row(int row) const {
    return {row / samples_per_view_, row % samples_per_view_};
  }

  const ImageBuffer& image(int view, int sample) const { return images_[row_of(view, sample)]; }
  void set_image(int view, int sample, ImageBuffer img);
  bool complete() const;

 private:
  int num_views_ = 0, samples_per_view_ = 0;
  SampleProvenance provenance_ = SampleProvenance::kOracle;
  std::string envmap_id_;
  std::vector<ImageBuffer> images_;
  std::vector<bool> present_;
};

// Latent draw behind one oracle sample: 8 standard-normal scalars mapped to
// a material perturbation. z = 0 reproduces the input material exactly.
struct MaterialPerturbation {
  float z[8] = {};

  static MaterialPerturbation draw(uint64_t seed, int view, int sample);
  static MaterialPerturbation zero() { return {}; }

  GgxMaterial apply(const GgxMaterial& base) const;
  bool is_zero() const;
};

// Analytic relighting oracle: renders latent-perturbed ground-truth scenes
// under the target environment. Sample s = 1 (index 0) always uses z = 0,
// so one sample per view is the exact ground-truth relit image.
class RelightingOracle {
 public:
  RelightingOracle(const Scene& scene_gt, const EnvironmentMap& target, RenderOptions render);

  // Renders all S samples for one view.
  std::vector<ImageBuffer> generate(const SampleRequest& request, const Camera& camera) const;

  // Convenience: the z = 0 anchor relight of one view.
  ImageBuffer anchor(const Camera& camera, uint64_t seed, int view_id) const;

 private:
  ImageBuffer render_perturbed(const Camera& camera, const MaterialPerturbation& pert,
                               uint64_t sample_seed) const;

  const Scene* scene_;
  const EnvironmentMap* target_;
  RenderOptions render_;
};

// Directory layout: view{i}_sample{s}.png for a complete N x S grid plus
// manifest.json {num_views, samples_per_view, resolution, envmap_id}.
void export_samples(const RelitSampleSet& set, const std::string& directory);
RelitSampleSet import_samples(const std::string& directory);

}  // namespace relight
