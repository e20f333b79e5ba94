// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/envmap.h"

#include <stdexcept>

#include "relight/image_io.h"
#include "relight/rng.h"

namespace relight {

namespace {

// sin(theta) for row y, written so mirrored rows (y, h-1-y) get bitwise
// identical values; vertical flips then preserve flux exactly.
float row_sin_theta(int y, int h) {
  const float d = std::abs((y + 0.5f) - 0.5f * h);
  return std::cos(d * kPi / h);
}

}  // namespace

EnvironmentMap::EnvironmentMap(ImageBuffer radiance) : radiance_(std::move(radiance)) {
  if (radiance_.channels() != 3)
    throw std::invalid_argument("environment map must have 3 channels");
  if (radiance_.width() != 2 * radiance_.height())
    throw std::invalid_argument("environment map must be 2:1 equirectangular");
  for (const float v : radiance_.pixels())
    if (!(v >= 0.f) || !std::isfinite(v))
      throw std::invalid_argument("environment radiance must be finite and >= 0");
}

EnvironmentMap EnvironmentMap::constant(float value, int width, int height) {
  ImageBuffer img(width, height, 3, Colorspace::kLinear);
  for (float& v : img.pixels()) v = value;
  return EnvironmentMap(std::move(img));
}

EnvironmentMap EnvironmentMap::load(const std::string& pfm_path) {
  return EnvironmentMap(read_pfm(pfm_path));
}

void EnvironmentMap::save(const std::string& pfm_path) const { write_pfm(radiance_, pfm_path); }

void EnvironmentMap::direction_to_uv(const Vec3& dir, float* u, float* v) const {
  const float theta = std::acos(clamp(dir.y, -1.f, 1.f));
  const float phi = std::atan2(dir.z, dir.x);
  *u = (phi + kPi) / kTwoPi;
  *v = theta / kPi;
}

Vec3 EnvironmentMap::lookup(const Vec3& dir) const {
  const float len = length(dir);
  if (!(len > 0.f)) throw std::invalid_argument("envmap lookup: zero-length direction");
  if (std::abs(len - 1.f) > 1e-4f)
    throw std::invalid_argument("envmap lookup: direction is not unit length");

  float u, v;
  direction_to_uv(dir, &u, &v);
  const int w = width(), h = height();
  // Texel centers sit at (x + 0.5)/W; wrap in u, clamp in v.
  const float fx = u * w - 0.5f;
  const float fy = clamp(v * h - 0.5f, 0.f, static_cast<float>(h - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(fy);
  const float tx = fx - x0;
  const float ty = fy - y0;
  const int xa = ((x0 % w) + w) % w;
  const int xb = (xa + 1) % w;
  const int yb = std::min(y0 + 1, h - 1);
  const Vec3 c00 = texel(xa, y0), c10 = texel(xb, y0);
  const Vec3 c01 = texel(xa, yb), c11 = texel(xb, yb);
  return lerp(lerp(c00, c10, tx), lerp(c01, c11, tx), ty);
}

Vec3 EnvironmentMap::texel_center_direction(int x, int y) const {
  const float u = (x + 0.5f) / width();
  const float v = (y + 0.5f) / height();
  const float theta = v * kPi;
  const float phi = u * kTwoPi - kPi;
  const float st = std::sin(theta);
  return {st * std::cos(phi), std::cos(theta), st * std::sin(phi)};
}

float EnvironmentMap::texel_solid_angle(int y) const {
  return (kTwoPi / width()) * (kPi / height()) * row_sin_theta(y, height());
}

float EnvironmentMap::total_flux() const {
  // Channel-symmetric flux so augmentation preserves it exactly.
  double flux = 0.0;
  for (int y = 0; y < height(); ++y) {
    double row = 0.0;
    for (int x = 0; x < width(); ++x) {
      const Vec3 c = texel(x, y);
      row += c.x + c.y + c.z;
    }
    flux += row * (1.0 / 3.0) * texel_solid_angle(y);
  }
  return static_cast<float>(flux);
}

Vec3 EnvironmentMap::irradiance_quadrature(const Vec3& normal) const {
  double r = 0.0, g = 0.0, b = 0.0;
  for (int y = 0; y < height(); ++y) {
    const double dw = texel_solid_angle(y);
    for (int x = 0; x < width(); ++x) {
      const float cos_term = dot(texel_center_direction(x, y), normal);
      if (cos_term <= 0.f) continue;
      const Vec3 c = texel(x, y);
      r += c.x * cos_term * dw;
      g += c.y * cos_term * dw;
      b += c.z * cos_term * dw;
    }
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

EnvironmentMap apply_augmentation(const EnvironmentMap& map, const Augmentation& aug) {
  const int w = map.width(), h = map.height();
  ImageBuffer out(w, h, 3, Colorspace::kLinear);
  for (int y = 0; y < h; ++y) {
    const int sy = aug.vertical_flip ? h - 1 - y : y;
    for (int x = 0; x < w; ++x) {
      const int sx = (x + aug.horizontal_shift) % w;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = map.radiance().at(sx, sy, aug.channel_perm[c]);
    }
  }
  return EnvironmentMap(std::move(out));
}

Augmentation draw_augmentation(int map_width, uint64_t seed) {
  Pcg32 rng = make_stream(seed, 0x61756721ull);
  Augmentation aug;
  aug.horizontal_shift = static_cast<int>(rng.next_u32(static_cast<uint32_t>(map_width)));
  aug.vertical_flip = rng.next_float() < 0.5f;
  for (int i = 2; i > 0; --i)
    std::swap(aug.channel_perm[i], aug.channel_perm[rng.next_u32(static_cast<uint32_t>(i + 1))]);
  return aug;
}

EnvironmentMap augment(const EnvironmentMap& map, uint64_t seed) {
  return apply_augmentation(map, draw_augmentation(map.width(), seed));
}

}  // namespace relight
