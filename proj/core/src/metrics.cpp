// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/metrics.h"

#include <stdexcept>

namespace relight {

std::vector<std::array<float, 3>> channel_scales(const std::vector<ImageBuffer>& pred,
                                                 const std::vector<ImageBuffer>& gt,
                                                 AlignmentMode mode) {
  if (pred.size() != gt.size()) throw std::invalid_argument("channel_scales: set size mismatch");
  const size_t n = pred.size();
  std::vector<std::array<float, 3>> scales(n, {1.f, 1.f, 1.f});

  auto accumulate = [](const ImageBuffer& p, const ImageBuffer& g, double dot[3], double nrm[3]) {
    if (p.width() != g.width() || p.height() != g.height() || p.channels() != g.channels())
      throw std::invalid_argument("channel_scales: image size mismatch");
    const float* pd = p.data();
    const float* gd = g.data();
    const size_t count = p.size();
    const int ch = p.channels();
    for (size_t i = 0; i < count; ++i) {
      const int c = static_cast<int>(i % ch) % 3;
      dot[c] += static_cast<double>(pd[i]) * gd[i];
      nrm[c] += static_cast<double>(pd[i]) * pd[i];
    }
  };

  if (mode == AlignmentMode::kPerImage) {
    for (size_t i = 0; i < n; ++i) {
      double dot[3] = {}, nrm[3] = {};
      accumulate(pred[i], gt[i], dot, nrm);
      for (int c = 0; c < 3; ++c)
        scales[i][c] = nrm[c] > 0.0 ? static_cast<float>(dot[c] / nrm[c]) : 1.f;
    }
  } else {
    double dot[3] = {}, nrm[3] = {};
    for (size_t i = 0; i < n; ++i) accumulate(pred[i], gt[i], dot, nrm);
    std::array<float, 3> s{1.f, 1.f, 1.f};
    for (int c = 0; c < 3; ++c) s[c] = nrm[c] > 0.0 ? static_cast<float>(dot[c] / nrm[c]) : 1.f;
    for (size_t i = 0; i < n; ++i) scales[i] = s;
  }
  return scales;
}

ImageBuffer apply_channel_scale(const ImageBuffer& image, const std::array<float, 3>& scale) {
  ImageBuffer out = image;
  float* d = out.data();
  const int ch = out.channels();
  for (size_t i = 0; i < out.size(); ++i) d[i] *= scale[(i % ch) % 3];
  return out;
}

double psnr(const ImageBuffer& pred, const ImageBuffer& gt, double peak) {
  if (pred.size() != gt.size()) throw std::invalid_argument("psnr: image size mismatch");
  double mse = 0.0;
  const float* p = pred.data();
  const float* g = gt.data();
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(p[i]) - g[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<float> to_gray(const ImageBuffer& img) {
  std::vector<float> gray(static_cast<size_t>(img.width()) * img.height());
  const int ch = img.channels();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      float acc = 0.f;
      for (int c = 0; c < ch; ++c) acc += img.at(x, y, c);
      gray[static_cast<size_t>(y) * img.width() + x] = acc / ch;
    }
  return gray;
}

}  // namespace

double ssim(const ImageBuffer& pred, const ImageBuffer& gt) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1 L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("ssim: image size mismatch");
  if (pred.width() < kWindow || pred.height() < kWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  double kernel[kWindow];
  double ksum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  const std::vector<float> a = to_gray(pred);
  const std::vector<float> b = to_gray(gt);
  const int w = pred.width(), h = pred.height();

  double total = 0.0;
  int64_t count = 0;
  for (int y = 0; y + kWindow <= h; ++y) {
    for (int x = 0; x + kWindow <= w; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int dy = 0; dy < kWindow; ++dy)
        for (int dx = 0; dx < kWindow; ++dx) {
          const double wgt = kernel[dy] * kernel[dx];
          const double va = a[static_cast<size_t>(y + dy) * w + (x + dx)];
          const double vb = b[static_cast<size_t>(y + dy) * w + (x + dx)];
          mu_a += wgt * va;
          mu_b += wgt * vb;
          aa += wgt * va * va;
          bb += wgt * vb * vb;
          ab += wgt * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / count;
}

}  // namespace relight
