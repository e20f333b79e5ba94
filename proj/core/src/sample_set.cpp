// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/sample_set.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "relight/image_io.h"
#include "relight/parallel.h"
#include "relight/rng.h"

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

RelitSampleSet::RelitSampleSet(int num_views, int samples_per_view, SampleProvenance provenance)
    : num_views_(num_views), samples_per_view_(samples_per_view), provenance_(provenance) {
  if (num_views < 1 || samples_per_view < 1)
    throw std::invalid_argument("sample set needs N >= 1 and S >= 1");
  images_.resize(static_cast<size_t>(num_views) * samples_per_view);
  present_.assign(images_.size(), false);
}

void RelitSampleSet::set_image(int view, int sample, ImageBuffer img) {
  const int row = row_of(view, sample);
  for (size_t i = 0; i < images_.size(); ++i) {
    if (!present_[i]) continue;
    if (images_[i].width() != img.width() || images_[i].height() != img.height())
      throw std::invalid_argument("sample set images must share one resolution");
    break;
  }
  images_[row] = std::move(img);
  present_[row] = true;
}

bool RelitSampleSet::complete() const {
  for (const bool p : present_)
    if (!p) return false;
  return true;
}

MaterialPerturbation MaterialPerturbation::draw(uint64_t seed, int view, int sample) {
  Pcg32 rng = make_stream(seed, 0x7065727475ull, static_cast<uint64_t>(view),
                          static_cast<uint64_t>(sample));
  MaterialPerturbation p;
  for (float& v : p.z) v = rng.next_normal();
  return p;
}

bool MaterialPerturbation::is_zero() const {
  for (const float v : z)
    if (v != 0.f) return false;
  return true;
}

namespace {

float logit_shift(float value, float shift) {
  if (shift == 0.f) return value;
  // Endpoints are fixed points of the logit transform.
  if (value <= 0.f || value >= 1.f) return value;
  const float logit = std::log(value / (1.f - value));
  return 1.f / (1.f + std::exp(-(logit + shift)));
}

}  // namespace

GgxMaterial MaterialPerturbation::apply(const GgxMaterial& base) const {
  GgxMaterial m = base;
  if (z[0] != 0.f) m.roughness = clamp(base.roughness * std::exp(0.3f * z[0]), 0.02f, 1.f);
  for (int c = 0; c < 3; ++c)
    if (z[1 + c] != 0.f) m.albedo[c] = saturate(base.albedo[c] * std::exp(0.1f * z[1 + c]));
  m.specular_mix = logit_shift(base.specular_mix, 0.5f * z[4]);
  m.f0 = logit_shift(base.f0, 0.5f * z[5]);
  return m;
}

RelightingOracle::RelightingOracle(const Scene& scene_gt, const EnvironmentMap& target,
                                   RenderOptions render)
    : scene_(&scene_gt), target_(&target), render_(render) {}

ImageBuffer RelightingOracle::render_perturbed(const Camera& camera,
                                               const MaterialPerturbation& pert,
                                               uint64_t sample_seed) const {
  Scene variant = *scene_;  // shares mesh + BVH, owns materials
  for (int o = 0; o < variant.object_count(); ++o)
    variant.mutable_material(o) = pert.apply(variant.material(o));
  RenderOptions opt = render_;
  opt.seed = sample_seed;
  return path_trace(variant, *target_, camera, opt);
}

std::vector<ImageBuffer> RelightingOracle::generate(const SampleRequest& request,
                                                    const Camera& camera) const {
  if (request.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  std::vector<ImageBuffer> samples(request.sample_count);
  for (int s = 0; s < request.sample_count; ++s) {
    // Sample 0 is the z = 0 anchor: the exact ground-truth relight.
    const MaterialPerturbation pert = s == 0
                                          ? MaterialPerturbation::zero()
                                          : MaterialPerturbation::draw(request.seed,
                                                                       request.view_id, s);
    const uint64_t rseed =
        hash_combine(hash_combine(request.seed, request.view_id), static_cast<uint64_t>(s));
    samples[s] = render_perturbed(camera, pert, rseed);
  }
  return samples;
}

ImageBuffer RelightingOracle::anchor(const Camera& camera, uint64_t seed, int view_id) const {
  const uint64_t rseed = hash_combine(hash_combine(seed, view_id), 0ull);
  return render_perturbed(camera, MaterialPerturbation::zero(), rseed);
}

void export_samples(const RelitSampleSet& set, const std::string& directory) {
  if (!set.complete()) throw std::runtime_error("export_samples: incomplete sample set");
  fs::create_directories(directory);
  for (int i = 0; i < set.num_views(); ++i)
    for (int s = 0; s < set.samples_per_view(); ++s) {
      const ImageBuffer& img = set.image(i, s);
      const std::string name =
          "view" + std::to_string(i) + "_sample" + std::to_string(s) + ".png";
      write_png(srgb_encode(img), directory + "/" + name);
    }
  const ImageBuffer& first = set.image(0, 0);
  const json manifest = {{"num_views", set.num_views()},
                         {"samples_per_view", set.samples_per_view()},
                         {"resolution", {first.width(), first.height()}},
                         {"envmap_id", set.envmap_id()}};
  std::ofstream f(directory + "/manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error(directory + "/manifest.json: cannot open for writing");
  f << manifest.dump(2);
}

RelitSampleSet import_samples(const std::string& directory) {
  std::ifstream mf(directory + "/manifest.json", std::ios::binary);
  if (!mf) throw std::runtime_error(directory + ": missing manifest.json");
  json manifest;
  mf >> manifest;
  const int n = manifest.at("num_views").get<int>();
  const int s_count = manifest.at("samples_per_view").get<int>();
  const int width = manifest.at("resolution")[0].get<int>();
  const int height = manifest.at("resolution")[1].get<int>();
  if (n < 1 || s_count < 1)
    throw std::runtime_error(directory + ": manifest inconsistency (counts must be >= 1)");

  RelitSampleSet set(n, s_count, SampleProvenance::kImported);
  set.set_envmap_id(manifest.value("envmap_id", ""));
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < s_count; ++s) {
      const std::string name =
          "view" + std::to_string(i) + "_sample" + std::to_string(s) + ".png";
      const std::string path = directory + "/" + name;
      if (!fs::exists(path))
        throw std::runtime_error(directory + ": missing sample cell " + name);
      ImageBuffer png = read_png(path);
      if (png.width() != width || png.height() != height)
        throw std::runtime_error(directory + ": resolution mismatch in " + name + " (got " +
                                 std::to_string(png.width()) + "x" +
                                 std::to_string(png.height()) + ", manifest says " +
                                 std::to_string(width) + "x" + std::to_string(height) + ")");
      set.set_image(i, s, srgb_decode(png));
    }
  return set;
}

}  // namespace relight
