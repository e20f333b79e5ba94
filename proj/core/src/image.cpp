// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/image.h"

#include <cmath>
#include <stdexcept>

namespace relight {

ImageBuffer::ImageBuffer(int width, int height, int channels, Colorspace cs)
    : width_(width), height_(height), channels_(channels), colorspace_(cs) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (channels != 1 && channels != 3 && channels != 12)
    throw std::invalid_argument("image channels must be 1, 3, or 12");
  data_.assign(static_cast<size_t>(width) * height * channels, 0.f);
}

bool ImageBuffer::all_finite() const {
  for (const float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

float srgb_encode_value(float linear) {
  const float v = linear <= 0.f ? 0.f : (linear >= 1.f ? 1.f : linear);
  return v <= 0.0031308f ? 12.92f * v : 1.055f * std::pow(v, 1.f / 2.4f) - 0.055f;
}

float srgb_decode_value(float encoded) {
  return encoded <= 0.04045f ? encoded / 12.92f : std::pow((encoded + 0.055f) / 1.055f, 2.4f);
}

ImageBuffer srgb_encode(const ImageBuffer& linear) {
  if (linear.colorspace() != Colorspace::kLinear)
    throw std::invalid_argument("srgb_encode: input is not linear-tagged");
  if (!linear.all_finite()) throw std::invalid_argument("srgb_encode: non-finite input values");
  ImageBuffer out(linear.width(), linear.height(), linear.channels(), Colorspace::kSrgbEncoded);
  const float* src = linear.data();
  float* dst = out.data();
  for (size_t i = 0; i < linear.size(); ++i) dst[i] = srgb_encode_value(src[i]);
  return out;
}

ImageBuffer srgb_decode(const ImageBuffer& encoded) {
  if (encoded.colorspace() != Colorspace::kSrgbEncoded)
    throw std::invalid_argument("srgb_decode: input is not srgb-tagged");
  ImageBuffer out(encoded.width(), encoded.height(), encoded.channels(), Colorspace::kLinear);
  const float* src = encoded.data();
  float* dst = out.data();
  for (size_t i = 0; i < encoded.size(); ++i) {
    if (src[i] < 0.f || src[i] > 1.f)
      throw std::invalid_argument("srgb_decode: value outside [0, 1]");
    dst[i] = srgb_decode_value(src[i]);
  }
  return out;
}

}  // namespace relight
