// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "relight/math.h"

namespace relight {

// Dense scalar field over an axis-aligned box: signed distance in world
// units or volume density in 1/world-units. Values are stored x-fastest.
class ScalarGrid {
 public:
  ScalarGrid() = default;
  ScalarGrid(std::array<int, 3> resolution, const Aabb& bounds);

  static ScalarGrid from_function(std::array<int, 3> resolution, const Aabb& bounds,
                                  const std::function<float(const Vec3&)>& f);

  const std::array<int, 3>& resolution() const { return res_; }
  const Aabb& bounds() const { return bounds_; }
  size_t size() const { return values_.size(); }
  float* data() { return values_.data(); }
  const float* data() const { return values_.data(); }

  float& at(int x, int y, int z) {
    return values_[(static_cast<size_t>(z) * res_[1] + y) * res_[0] + x];
  }
  float at(int x, int y, int z) const {
    return values_[(static_cast<size_t>(z) * res_[1] + y) * res_[0] + x];
  }

  // World position of grid node (x, y, z); nodes span the bounds inclusively.
  Vec3 node_position(int x, int y, int z) const;
  Vec3 voxel_extent() const;

  float min_value() const;
  float max_value() const;

  // Raw little-endian float32 block plus a JSON sidecar {resolution, bounds}.
  void save(const std::string& raw_path) const;
  static ScalarGrid load(const std::string& raw_path);

 private:
  std::array<int, 3> res_ = {0, 0, 0};
  Aabb bounds_;
  std::vector<float> values_;
};

}  // namespace relight
