// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relight/math.h"

namespace relight {

enum class Colorspace { kLinear, kSrgbEncoded };

// Row-major float image, 1/3/12 channels. Linear radiance unless tagged
// srgb-encoded; srgb-encoded buffers hold values in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, Colorspace cs = Colorspace::kLinear);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Colorspace colorspace() const { return colorspace_; }
  void set_colorspace(Colorspace cs) { colorspace_ = cs; }

  size_t size() const { return data_.size(); }
  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> pixels() { return data_; }
  std::span<const float> pixels() const { return data_; }

  float& at(int x, int y, int c) { return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c]; }
  float at(int x, int y, int c) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  Vec3 rgb(int x, int y) const {
    const size_t i = (static_cast<size_t>(y) * width_ + x) * channels_;
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_rgb(int x, int y, const Vec3& v) {
    const size_t i = (static_cast<size_t>(y) * width_ + x) * channels_;
    data_[i] = v.x;
    data_[i + 1] = v.y;
    data_[i + 2] = v.z;
  }

  bool all_finite() const;

 private:
  int width_ = 0, height_ = 0, channels_ = 0;
  Colorspace colorspace_ = Colorspace::kLinear;
  std::vector<float> data_;
};

// Scalar IEC 61966-2-1 transfer functions over [0, 1].
float srgb_encode_value(float linear);
float srgb_decode_value(float encoded);

// Piecewise sRGB transfer per channel. Input must be linear-tagged and
// finite; values are clamped to [0, 1] before the curve (HDR renders
// routinely exceed 1, matching tone-clipped LDR output).
ImageBuffer srgb_encode(const ImageBuffer& linear);

// Exact inverse on [0, 1]. Input must be srgb-encoded with values in [0, 1].
ImageBuffer srgb_decode(const ImageBuffer& encoded);

}  // namespace relight
