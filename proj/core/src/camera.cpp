// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/camera.h"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace relight {

using nlohmann::json;

bool Camera::is_valid(float tol) const {
  if (!(focal > 0.f) || width <= 0 || height <= 0) return false;
  // Orthonormality of the rotation rows and det = +1.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const float expect = i == j ? 1.f : 0.f;
      if (std::abs(dot(rotation[i], rotation[j]) - expect) > tol) return false;
    }
  const float det = dot(rotation[0], cross(rotation[1], rotation[2]));
  return std::abs(det - 1.f) <= tol;
}

Ray Camera::ray_through(float px, float py) const {
  // Camera space: +X right, +Y up, looking down -Z. Pixel rows grow downward.
  const Vec3 dir_cam{(px - principal_x) / focal, -(py - principal_y) / focal, -1.f};
  // rotation[i] is row i of the world-from-camera rotation.
  const Vec3 dir_world{dot(rotation[0], dir_cam), dot(rotation[1], dir_cam),
                       dot(rotation[2], dir_cam)};
  return {position, normalize(dir_world)};
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, float focal,
                       int width, int height) {
  Camera cam;
  const Vec3 back = normalize(eye - target);  // camera +Z
  Vec3 right = cross(normalize(up), back);
  const float len = length(right);
  // Degenerate up: pick another axis.
  right = len < 1e-6f ? normalize(cross(Vec3{1.f, 0.f, 0.f}, back)) : right / len;
  const Vec3 cam_up = cross(back, right);
  // Columns of world-from-camera are (right, up, back); stored as rows here.
  cam.rotation[0] = {right.x, cam_up.x, back.x};
  cam.rotation[1] = {right.y, cam_up.y, back.y};
  cam.rotation[2] = {right.z, cam_up.z, back.z};
  cam.position = eye;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.principal_x = width * 0.5f;
  cam.principal_y = height * 0.5f;
  return cam;
}

std::string cameras_to_json(const std::vector<Camera>& cameras) {
  json arr = json::array();
  for (const Camera& c : cameras) {
    json transform = json::array();
    for (int i = 0; i < 3; ++i) {
      transform.push_back(c.rotation[i].x);
      transform.push_back(c.rotation[i].y);
      transform.push_back(c.rotation[i].z);
      transform.push_back(c.position[i]);
    }
    arr.push_back({{"transform", transform},
                   {"focal", c.focal},
                   {"principal_point", {c.principal_x, c.principal_y}},
                   {"resolution", {c.width, c.height}}});
  }
  return arr.dump(2);
}

std::vector<Camera> cameras_from_json(const std::string& json_text) {
  const json arr = json::parse(json_text);
  if (!arr.is_array()) throw std::runtime_error("camera JSON: expected a list");
  std::vector<Camera> out;
  out.reserve(arr.size());
  for (const json& j : arr) {
    Camera c;
    const auto& t = j.at("transform");
    if (t.size() != 12) throw std::runtime_error("camera JSON: transform must have 12 numbers");
    for (int i = 0; i < 3; ++i) {
      c.rotation[i] = {t[i * 4 + 0].get<float>(), t[i * 4 + 1].get<float>(),
                       t[i * 4 + 2].get<float>()};
      c.position[i] = t[i * 4 + 3].get<float>();
    }
    c.focal = j.at("focal").get<float>();
    c.principal_x = j.at("principal_point")[0].get<float>();
    c.principal_y = j.at("principal_point")[1].get<float>();
    c.width = j.at("resolution")[0].get<int>();
    c.height = j.at("resolution")[1].get<int>();
    if (!c.is_valid())
      throw std::runtime_error("camera JSON: rotation not orthonormal or focal <= 0");
    out.push_back(c);
  }
  return out;
}

void save_cameras(const std::vector<Camera>& cameras, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f << cameras_to_json(cameras);
}

std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for reading");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return cameras_from_json(text);
}

}  // namespace relight
