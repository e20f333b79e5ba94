// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/scalar_grid.h"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace relight {

using nlohmann::json;

ScalarGrid::ScalarGrid(std::array<int, 3> resolution, const Aabb& bounds)
    : res_(resolution), bounds_(bounds) {
  for (const int r : res_)
    if (r < 2) throw std::invalid_argument("grid resolution must be >= 2 per axis");
  values_.assign(static_cast<size_t>(res_[0]) * res_[1] * res_[2], 0.f);
}

ScalarGrid ScalarGrid::from_function(std::array<int, 3> resolution, const Aabb& bounds,
                                     const std::function<float(const Vec3&)>& f) {
  ScalarGrid g(resolution, bounds);
  for (int z = 0; z < resolution[2]; ++z)
    for (int y = 0; y < resolution[1]; ++y)
      for (int x = 0; x < resolution[0]; ++x) g.at(x, y, z) = f(g.node_position(x, y, z));
  return g;
}

Vec3 ScalarGrid::node_position(int x, int y, int z) const {
  const Vec3 e = bounds_.extent();
  return {bounds_.lo.x + e.x * x / (res_[0] - 1), bounds_.lo.y + e.y * y / (res_[1] - 1),
          bounds_.lo.z + e.z * z / (res_[2] - 1)};
}

Vec3 ScalarGrid::voxel_extent() const {
  const Vec3 e = bounds_.extent();
  return {e.x / (res_[0] - 1), e.y / (res_[1] - 1), e.z / (res_[2] - 1)};
}

float ScalarGrid::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
float ScalarGrid::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

void ScalarGrid::save(const std::string& raw_path) const {
  std::ofstream f(raw_path, std::ios::binary);
  if (!f) throw std::runtime_error(raw_path + ": cannot open for writing");
  f.write(reinterpret_cast<const char*>(values_.data()),
          static_cast<std::streamsize>(values_.size() * sizeof(float)));

  const json sidecar = {{"resolution", res_},
                        {"bounds",
                         {{"lo", {bounds_.lo.x, bounds_.lo.y, bounds_.lo.z}},
                          {"hi", {bounds_.hi.x, bounds_.hi.y, bounds_.hi.z}}}}};
  std::ofstream sf(raw_path + ".json", std::ios::binary);
  if (!sf) throw std::runtime_error(raw_path + ".json: cannot open for writing");
  sf << sidecar.dump(2);
}

ScalarGrid ScalarGrid::load(const std::string& raw_path) {
  std::ifstream sf(raw_path + ".json", std::ios::binary);
  if (!sf) throw std::runtime_error(raw_path + ".json: cannot open for reading");
  json sidecar;
  sf >> sidecar;
  Aabb bounds;
  const auto& lo = sidecar.at("bounds").at("lo");
  const auto& hi = sidecar.at("bounds").at("hi");
  bounds.lo = {lo[0].get<float>(), lo[1].get<float>(), lo[2].get<float>()};
  bounds.hi = {hi[0].get<float>(), hi[1].get<float>(), hi[2].get<float>()};
  ScalarGrid g(sidecar.at("resolution").get<std::array<int, 3>>(), bounds);

  std::ifstream f(raw_path, std::ios::binary);
  if (!f) throw std::runtime_error(raw_path + ": cannot open for reading");
  f.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(g.size() * sizeof(float)));
  if (static_cast<size_t>(f.gcount()) != g.size() * sizeof(float))
    throw std::runtime_error(raw_path + ": truncated grid block");
  return g;
}

}  // namespace relight
