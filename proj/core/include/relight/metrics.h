// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "relight/image.h"

namespace relight {

enum class AlignmentMode { kPerImage, kGlobal };

// Least-squares channel-wise scale factors s_c = <pred, gt> / <pred, pred>,
// computed per image or over the concatenation of all images. Zero-energy
// channels get scale 1. Applied as pred * s in linear space.
std::vector<std::array<float, 3>> channel_scales(const std::vector<ImageBuffer>& pred,
                                                 const std::vector<ImageBuffer>& gt,
                                                 AlignmentMode mode);
ImageBuffer apply_channel_scale(const ImageBuffer& image, const std::array<float, 3>& scale);

// 10 log10(peak^2 / MSE); +infinity when MSE is zero.
double psnr(const ImageBuffer& pred, const ImageBuffer& gt, double peak = 1.0);

// Mean local SSIM over valid 11x11 windows (Gaussian sigma 1.5, K1 = 0.01,
// K2 = 0.03, dynamic range 1) on channel-mean grayscale.
double ssim(const ImageBuffer& pred, const ImageBuffer& gt);

}  // namespace relight
