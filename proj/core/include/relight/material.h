// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "relight/math.h"

namespace relight {

// Diffuse + GGX specular surface. specular_mix blends the two lobes; f0 is
// the scalar Fresnel reflectance at normal incidence for the specular lobe.
struct GgxMaterial {
  Vec3 albedo{1.f, 1.f, 1.f};   // per-channel, [0, 1]
  float roughness = 0.5f;       // GGX alpha, [0.02, 1]
  float specular_mix = 0.f;     // [0, 1]
  float f0 = 0.04f;             // [0, 1]

  bool is_valid() const {
    return albedo.x >= 0.f && albedo.x <= 1.f && albedo.y >= 0.f && albedo.y <= 1.f &&
           albedo.z >= 0.f && albedo.z <= 1.f && roughness >= 0.02f && roughness <= 1.f &&
           specular_mix >= 0.f && specular_mix <= 1.f && f0 >= 0.f && f0 <= 1.f;
  }
};

// The four fixed radiance-cue materials: one diffuse with pure white albedo,
// then purely-specular (mix 1, f0 1) at roughness 0.05, 0.13, 0.34.
std::array<GgxMaterial, 4> cue_materials();

// Trowbridge-Reitz (GGX) normal distribution.
// D = alpha^2 / (pi * ((n.h)^2 (alpha^2 - 1) + 1)^2)
float ggx_ndf(float n_dot_h, float alpha);

// Height-correlated Smith masking-shadowing for GGX.
float smith_g(float n_dot_v, float n_dot_l, float alpha);

// Schlick Fresnel: f0 + (1 - f0) (1 - cos)^5.
float fresnel_schlick(float f0, float cos_theta);

struct BsdfSample {
  Vec3 incident;  // unit, world space
  float pdf = 0.f;  // solid angle
};

// Samples a half-vector proportional to D(h)(n.h) and reflects the view
// direction about it. A below-surface result reports pdf 0 (zero-throughput
// sample, not an error).
BsdfSample sample_ggx(const Vec3& normal, const Vec3& view, float alpha, float u1, float u2);

// Solid-angle pdf of sample_ggx for a given incident direction.
float ggx_pdf(const Vec3& normal, const Vec3& view, const Vec3& incident, float alpha);

// Full material BRDF value f(view, incident) (radiance units, no cosine).
Vec3 eval_brdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view,
               const Vec3& incident);

// Combined lobe-selection sampling of the material; pdf is the mixture pdf.
BsdfSample sample_brdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view, float u_lobe,
                       float u1, float u2);
float brdf_pdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view,
               const Vec3& incident);

// Cosine-weighted hemisphere sample around the normal (diffuse lobe).
BsdfSample sample_cosine(const Vec3& normal, float u1, float u2);

}  // namespace relight
