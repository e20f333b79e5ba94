// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/field/latent.h"

#include <cmath>
#include <stdexcept>

#include "relight/rng.h"

namespace relight::field {

LatentTable::LatentTable(int rows, int dim, int bottleneck_width, int mod_hidden,
                         uint64_t init_seed)
    : rows_(rows), dim_(dim), bottleneck_(bottleneck_width), hidden_(mod_hidden) {
  if (rows < 1) throw std::invalid_argument("latent table needs at least one row");
  // Codes start at zero; the head weights must not (both at zero the
  // gradient to the codes vanishes identically and nothing ever moves).
  codes_.assign(static_cast<size_t>(rows) * dim, 0.f);
  mod_w1_.assign(static_cast<size_t>(hidden_) * dim, 0.f);
  mod_w2_.assign(static_cast<size_t>(2 * bottleneck_) * hidden_, 0.f);
  Pcg32 rng = make_stream(init_seed, 0x6d6f64ull);
  for (float& w : mod_w1_) w = (rng.next_float() * 2.f - 1.f) * 0.1f;
  for (float& w : mod_w2_) w = (rng.next_float() * 2.f - 1.f) * 0.01f;
}

void LatentTable::modulation(std::span<const float> z, float* hidden, float* out) const {
  for (int h = 0; h < hidden_; ++h) {
    float acc = 0.f;
    const float* row = mod_w1_.data() + static_cast<size_t>(h) * dim_;
    for (int k = 0; k < dim_; ++k) acc += row[k] * z[k];
    hidden[h] = std::tanh(acc);
  }
  const int out_n = 2 * bottleneck_;
  for (int o = 0; o < out_n; ++o) {
    float acc = 0.f;
    const float* row = mod_w2_.data() + static_cast<size_t>(o) * hidden_;
    for (int h = 0; h < hidden_; ++h) acc += row[h] * hidden[h];
    out[o] = acc;
  }
}

}  // namespace relight::field
