// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/light_sampler.h"

#include <algorithm>
#include <stdexcept>

namespace relight {

LightSampler::LightSampler(const EnvironmentMap& map)
    : map_(&map), width_(map.width()), height_(map.height()) {
  const int w = width_, h = height_;
  std::vector<double> row_sums(h, 0.0);
  std::vector<double> weights(static_cast<size_t>(w) * h, 0.0);

  for (int y = 0; y < h; ++y) {
    const double dw = map.texel_solid_angle(y);
    for (int x = 0; x < w; ++x) {
      // Luminance * sin(theta) via the solid-angle factor; poles where
      // sin(theta) ~ 0 get vanishing weight, avoiding a 0/0 there.
      const double wgt = luminance(map.texel(x, y)) * dw;
      weights[static_cast<size_t>(y) * w + x] = wgt;
      row_sums[y] += wgt;
    }
  }
  double total = 0.0;
  for (int y = 0; y < h; ++y) total += row_sums[y];
  if (!(total > 0.0)) throw std::invalid_argument("light sampler: environment map is all black");
  total_flux_ = static_cast<float>(total);

  marginal_cdf_.resize(h);
  conditional_cdf_.resize(static_cast<size_t>(w) * h);
  pdf_.resize(static_cast<size_t>(w) * h);

  double acc = 0.0;
  for (int y = 0; y < h; ++y) {
    acc += row_sums[y] / total;
    marginal_cdf_[y] = static_cast<float>(acc);
  }
  marginal_cdf_[h - 1] = 1.f;

  for (int y = 0; y < h; ++y) {
    float* cond = conditional_cdf_.data() + static_cast<size_t>(y) * w;
    if (row_sums[y] <= 0.0) {
      // Unreachable row; keep the table well-formed.
      for (int x = 0; x < w; ++x) cond[x] = (x + 1.f) / w;
      continue;
    }
    double racc = 0.0;
    for (int x = 0; x < w; ++x) {
      racc += weights[static_cast<size_t>(y) * w + x] / row_sums[y];
      cond[x] = static_cast<float>(racc);
    }
    cond[w - 1] = 1.f;
  }

  for (int y = 0; y < h; ++y) {
    const double dw = map.texel_solid_angle(y);
    for (int x = 0; x < w; ++x) {
      const double prob = weights[static_cast<size_t>(y) * w + x] / total;
      pdf_[static_cast<size_t>(y) * w + x] = dw > 0.0 ? static_cast<float>(prob / dw) : 0.f;
    }
  }
}

LightSample LightSampler::sample(float u1, float u2) const {
  const int w = width_, h = height_;
  const int y = static_cast<int>(
      std::upper_bound(marginal_cdf_.begin(), marginal_cdf_.end(), u2) - marginal_cdf_.begin());
  const int yy = std::min(y, h - 1);
  const float* cond = conditional_cdf_.data() + static_cast<size_t>(yy) * w;
  const int x = static_cast<int>(std::upper_bound(cond, cond + w, u1) - cond);
  const int xx = std::min(x, w - 1);

  // Jitter uniformly inside the chosen texel, reusing the CDF remainders.
  const float cdf_x0 = xx > 0 ? cond[xx - 1] : 0.f;
  const float cdf_y0 = yy > 0 ? marginal_cdf_[yy - 1] : 0.f;
  const float frac_x = cond[xx] > cdf_x0 ? (u1 - cdf_x0) / (cond[xx] - cdf_x0) : 0.5f;
  const float frac_y =
      marginal_cdf_[yy] > cdf_y0 ? (u2 - cdf_y0) / (marginal_cdf_[yy] - cdf_y0) : 0.5f;

  const float u = (xx + clamp(frac_x, 0.f, 0.999999f)) / w;
  const float v = (yy + clamp(frac_y, 0.f, 0.999999f)) / h;
  const float theta = v * kPi;
  const float phi = u * kTwoPi - kPi;
  const float st = std::sin(theta);

  LightSample s;
  s.dir = {st * std::cos(phi), std::cos(theta), st * std::sin(phi)};
  s.radiance = map_->texel(xx, yy);
  s.pdf = pdf_[static_cast<size_t>(yy) * w + xx];
  return s;
}

float LightSampler::pdf(const Vec3& dir) const {
  float u, v;
  map_->direction_to_uv(dir, &u, &v);
  const int x = std::clamp(static_cast<int>(u * width_), 0, width_ - 1);
  const int y = std::clamp(static_cast<int>(v * height_), 0, height_ - 1);
  return pdf_[static_cast<size_t>(y) * width_ + x];
}

}  // namespace relight
