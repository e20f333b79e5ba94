// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "relight/image.h"

namespace relight {

// Equirectangular HDR radiance over the sphere. Convention: world up is +Y;
// v = theta/pi with theta the polar angle from +Y, u = (phi + pi)/(2*pi)
// with phi = atan2(z, x). u wraps, v clamps.
class EnvironmentMap {
 public:
  EnvironmentMap() = default;
  explicit EnvironmentMap(ImageBuffer radiance);

  static EnvironmentMap constant(float value, int width = 16, int height = 8);
  static EnvironmentMap load(const std::string& pfm_path);
  void save(const std::string& pfm_path) const;

  int width() const { return radiance_.width(); }
  int height() const { return radiance_.height(); }
  const ImageBuffer& radiance() const { return radiance_; }

  Vec3 texel(int x, int y) const { return radiance_.rgb(x, y); }

  // Bilinear lookup along a unit direction (|dir| = 1 within 1e-4).
  Vec3 lookup(const Vec3& dir) const;

  // Direction through the center of texel (x, y).
  Vec3 texel_center_direction(int x, int y) const;
  // Continuous texel coordinates of a direction (u*W - 0.5, v*H - 0.5 space).
  void direction_to_uv(const Vec3& dir, float* u, float* v) const;

  // Solid angle subtended by row y's texels.
  float texel_solid_angle(int y) const;

  // Total flux: integral of luminance over the sphere.
  float total_flux() const;

  // Irradiance onto a surface with the given unit normal by direct texel
  // quadrature (cosine-weighted sum over all texels).
  Vec3 irradiance_quadrature(const Vec3& normal) const;

 private:
  ImageBuffer radiance_;
};

struct Augmentation {
  int horizontal_shift = 0;
  bool vertical_flip = false;
  int channel_perm[3] = {0, 1, 2};
};

EnvironmentMap apply_augmentation(const EnvironmentMap& map, const Augmentation& aug);
Augmentation draw_augmentation(int map_width, uint64_t seed);

// Dataset augmentation: uniform-random integer horizontal texel shift, then
// a vertical flip with probability 1/2, then a uniformly random permutation
// of the RGB channels. Deterministic given seed.
EnvironmentMap augment(const EnvironmentMap& map, uint64_t seed);

}  // namespace relight
