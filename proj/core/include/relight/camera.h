// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "relight/math.h"

namespace relight {

// Pinhole camera. camera_to_world is a rigid 3x4 transform whose rotation
// part must be orthonormal with det +1; the camera looks down its local -Z
// axis with +X right and +Y up.
struct Camera {
  Vec3 rotation[3];  // rows of the world-from-camera rotation
  Vec3 position;
  float focal = 0.f;          // pixels
  float principal_x = 0.f;    // pixels
  float principal_y = 0.f;
  int width = 0, height = 0;  // resolution

  bool is_valid(float tol = 1e-6f) const;

  // Ray through pixel (x + jx, y + jy), jitter in [0, 1).
  Ray ray_through(float px, float py) const;

  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, float focal,
                        int width, int height);
};

// Camera sets serialize as a JSON list of
// {transform: 12 numbers row-major, focal, principal_point, resolution}.
std::string cameras_to_json(const std::vector<Camera>& cameras);
std::vector<Camera> cameras_from_json(const std::string& json_text);
void save_cameras(const std::vector<Camera>& cameras, const std::string& path);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace relight
