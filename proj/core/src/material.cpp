// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/material.h"

namespace relight {

std::array<GgxMaterial, 4> cue_materials() {
  GgxMaterial diffuse;
  diffuse.albedo = {1.f, 1.f, 1.f};
  diffuse.specular_mix = 0.f;
  diffuse.roughness = 0.5f;  // unused by the diffuse lobe

  auto spec = [](float alpha) {
    GgxMaterial m;
    m.albedo = {1.f, 1.f, 1.f};
    m.roughness = alpha;
    m.specular_mix = 1.f;
    m.f0 = 1.f;
    return m;
  };
  return {diffuse, spec(0.05f), spec(0.13f), spec(0.34f)};
}

float ggx_ndf(float n_dot_h, float alpha) {
  const float a2 = alpha * alpha;
  const float d = n_dot_h * n_dot_h * (a2 - 1.f) + 1.f;
  return a2 / (kPi * d * d);
}

float smith_g(float n_dot_v, float n_dot_l, float alpha) {
  const float a2 = alpha * alpha;
  const float nv = std::abs(n_dot_v), nl = std::abs(n_dot_l);
  const float lv = nl * std::sqrt(a2 + (1.f - a2) * nv * nv);
  const float ll = nv * std::sqrt(a2 + (1.f - a2) * nl * nl);
  const float denom = lv + ll;
  return denom > 0.f ? 2.f * nv * nl / denom : 0.f;
}

float fresnel_schlick(float f0, float cos_theta) {
  const float m = saturate(1.f - cos_theta);
  const float m2 = m * m;
  return f0 + (1.f - f0) * m2 * m2 * m;
}

BsdfSample sample_ggx(const Vec3& normal, const Vec3& view, float alpha, float u1, float u2) {
  // Half-vector from the D(h)(n.h) distribution (Walter et al. sampling).
  const float phi = kTwoPi * u1;
  const float tan2 = alpha * alpha * u2 / std::max(1.f - u2, 1e-12f);
  const float cos_t = 1.f / std::sqrt(1.f + tan2);
  const float sin_t = std::sqrt(std::max(0.f, 1.f - cos_t * cos_t));

  const Frame frame = Frame::from_normal(normal);
  const Vec3 h = frame.to_world({sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t});

  BsdfSample s;
  const float v_dot_h = dot(view, h);
  if (v_dot_h <= 0.f) return s;  // half-vector behind the view: zero throughput
  s.incident = 2.f * v_dot_h * h - view;
  if (dot(s.incident, normal) <= 0.f) return s;  // below the surface
  const float d = ggx_ndf(cos_t, alpha);
  s.pdf = d * cos_t / (4.f * v_dot_h);
  return s;
}

float ggx_pdf(const Vec3& normal, const Vec3& view, const Vec3& incident, float alpha) {
  if (dot(incident, normal) <= 0.f || dot(view, normal) <= 0.f) return 0.f;
  Vec3 h = view + incident;
  const float len = length(h);
  if (len < 1e-12f) return 0.f;
  h = h / len;
  const float n_dot_h = dot(normal, h);
  const float v_dot_h = dot(view, h);
  if (n_dot_h <= 0.f || v_dot_h <= 0.f) return 0.f;
  return ggx_ndf(n_dot_h, alpha) * n_dot_h / (4.f * v_dot_h);
}

BsdfSample sample_cosine(const Vec3& normal, float u1, float u2) {
  const float phi = kTwoPi * u1;
  const float r = std::sqrt(u2);
  const float z = std::sqrt(std::max(0.f, 1.f - u2));
  const Frame frame = Frame::from_normal(normal);
  BsdfSample s;
  s.incident = frame.to_world({r * std::cos(phi), r * std::sin(phi), z});
  s.pdf = z * kInvPi;
  return s;
}

Vec3 eval_brdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view,
               const Vec3& incident) {
  const float n_dot_v = dot(normal, view);
  const float n_dot_l = dot(normal, incident);
  if (n_dot_v <= 0.f || n_dot_l <= 0.f) return Vec3{};

  Vec3 f{};
  if (mat.specular_mix < 1.f) f += mat.albedo * (kInvPi * (1.f - mat.specular_mix));
  if (mat.specular_mix > 0.f) {
    Vec3 h = view + incident;
    const float len = length(h);
    if (len >= 1e-12f) {
      h = h / len;
      const float n_dot_h = dot(normal, h);
      const float v_dot_h = dot(view, h);
      if (n_dot_h > 0.f && v_dot_h > 0.f) {
        const float d = ggx_ndf(n_dot_h, mat.roughness);
        const float g = smith_g(n_dot_v, n_dot_l, mat.roughness);
        const float fr = fresnel_schlick(mat.f0, v_dot_h);
        f += Vec3{1.f, 1.f, 1.f} * (mat.specular_mix * d * g * fr / (4.f * n_dot_v * n_dot_l));
      }
    }
  }
  return f;
}

BsdfSample sample_brdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view, float u_lobe,
                       float u1, float u2) {
  const bool pick_spec = u_lobe < mat.specular_mix;
  BsdfSample s = pick_spec ? sample_ggx(normal, view, mat.roughness, u1, u2)
                           : sample_cosine(normal, u1, u2);
  if (s.pdf <= 0.f) return s;
  s.pdf = brdf_pdf(mat, normal, view, s.incident);
  return s;
}

float brdf_pdf(const GgxMaterial& mat, const Vec3& normal, const Vec3& view,
               const Vec3& incident) {
  const float n_dot_l = dot(normal, incident);
  if (n_dot_l <= 0.f) return 0.f;
  float pdf = 0.f;
  if (mat.specular_mix < 1.f) pdf += (1.f - mat.specular_mix) * n_dot_l * kInvPi;
  if (mat.specular_mix > 0.f)
    pdf += mat.specular_mix * ggx_pdf(normal, view, incident, mat.roughness);
  return pdf;
}

}  // namespace relight
