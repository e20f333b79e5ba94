// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "relight/image.h"

namespace relight {

// Format from extension: .png (8-bit RGB, srgb-encoded) or .pfm (float32
// linear, little-endian, bottom-up scanlines). PFM round-trips bit-exactly;
// PNG round-trips exactly after 8-bit quantization.
//
// 12-channel buffers map to a single PFM of height 4*H holding four RGB
// planes stacked top-to-bottom in cue order.
ImageBuffer read_image(const std::string& path);
void write_image(const ImageBuffer& image, const std::string& path);

ImageBuffer read_pfm(const std::string& path);
void write_pfm(const ImageBuffer& image, const std::string& path);

ImageBuffer read_png(const std::string& path);
void write_png(const ImageBuffer& image, const std::string& path);

// Conversions between the 12-channel form and the stacked 3-channel form
// used on disk (four RGB planes, top-to-bottom, height 4*H).
ImageBuffer stack_cue_planes(const ImageBuffer& twelve);
ImageBuffer unstack_cue_planes(const ImageBuffer& stacked);

}  // namespace relight
