// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "relight/field/latent.h"
#include "relight/field/radiance_field.h"

namespace relight::field {

// Checkpoints are a raw little-endian float32 block (tensors back to back in
// manifest order) plus a JSON manifest carrying tensor names/shapes/offsets,
// the field config, and the training step. The latent table, when present,
// serializes as additional tensors.
void save_checkpoint(const RadianceFieldParams& params, const LatentTable* latents, int step,
                     const std::string& path_stem);

struct Checkpoint {
  RadianceFieldParams params;
  LatentTable latents;  // rows() == 0 when absent
  int step = 0;
};
Checkpoint load_checkpoint(const std::string& path_stem);

}  // namespace relight::field
