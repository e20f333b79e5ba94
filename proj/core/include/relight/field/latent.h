// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "relight/field/field_config.h"

namespace relight::field {

// N*S latent codes plus the modulation head mapping a code to an
// element-wise scale and shift of the appearance bottleneck. The head has
// no bias terms, so Z = 0 maps to scale 1, shift 0 exactly and renders the
// unmodulated bottleneck bitwise.
class LatentTable {
 public:
  LatentTable() = default;
  LatentTable(int rows, int dim, int bottleneck_width, int mod_hidden, uint64_t init_seed);

  int rows() const { return rows_; }
  int dim() const { return dim_; }
  int bottleneck() const { return bottleneck_; }
  int hidden() const { return hidden_; }

  std::span<float> code(int row) {
    return {codes_.data() + static_cast<size_t>(row) * dim_, static_cast<size_t>(dim_)};
  }
  std::span<const float> code(int row) const {
    return {codes_.data() + static_cast<size_t>(row) * dim_, static_cast<size_t>(dim_)};
  }
  std::vector<float>& codes() { return codes_; }
  const std::vector<float>& codes() const { return codes_; }
  std::vector<float>& mod_w1() { return mod_w1_; }
  const std::vector<float>& mod_w1() const { return mod_w1_; }
  std::vector<float>& mod_w2() { return mod_w2_; }
  const std::vector<float>& mod_w2() const { return mod_w2_; }

  // out = W2 tanh(W1 z): first `bottleneck` entries are the raw scale
  // (applied as 1 + raw), the rest the shift. hidden receives tanh(W1 z).
  void modulation(std::span<const float> z, float* hidden, float* out) const;

 private:
  int rows_ = 0, dim_ = 0, bottleneck_ = 0, hidden_ = 0;
  std::vector<float> codes_;   // rows x dim
  std::vector<float> mod_w1_;  // hidden x dim
  std::vector<float> mod_w2_;  // 2*bottleneck x hidden
};

}  // namespace relight::field
