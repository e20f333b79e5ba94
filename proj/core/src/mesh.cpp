// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/mesh.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace relight {

Aabb TriangleMesh::bounds() const {
  Aabb b;
  for (const Vec3& v : vertices) b.expand(v);
  return b;
}

void TriangleMesh::compute_geometric_normals() {
  geometric_normals.assign(vertices.size(), Vec3{});
  for (const auto& tri : triangles) {
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    const Vec3 fn = cross(e1, e2);  // length = 2 * area, giving area weighting
    for (const uint32_t vi : tri) geometric_normals[vi] += fn;
  }
  for (size_t i = 0; i < geometric_normals.size(); ++i) {
    const float len = length(geometric_normals[i]);
    geometric_normals[i] = len > 1e-20f ? geometric_normals[i] / len : Vec3{0.f, 1.f, 0.f};
  }
}

void TriangleMesh::remove_degenerate_triangles(float area_tol) {
  std::vector<std::array<uint32_t, 3>> kept;
  kept.reserve(triangles.size());
  for (const auto& tri : triangles) {
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    if (0.5f * length(cross(e1, e2)) > area_tol) kept.push_back(tri);
  }
  triangles = std::move(kept);
}

void smooth_normals(TriangleMesh& mesh, int iterations, float weight) {
  if (mesh.geometric_normals.size() != mesh.vertices.size())
    mesh.compute_geometric_normals();
  std::vector<Vec3> current = mesh.geometric_normals;
  if (iterations > 0) {
    // One-ring adjacency.
    std::vector<std::vector<uint32_t>> ring(mesh.vertices.size());
    for (const auto& tri : mesh.triangles)
      for (int i = 0; i < 3; ++i) {
        ring[tri[i]].push_back(tri[(i + 1) % 3]);
        ring[tri[i]].push_back(tri[(i + 2) % 3]);
      }

    std::vector<Vec3> next(current.size());
    for (int it = 0; it < iterations; ++it) {
      for (size_t v = 0; v < current.size(); ++v) {
        if (ring[v].empty()) {
          next[v] = current[v];
          continue;
        }
        Vec3 avg{};
        for (const uint32_t n : ring[v]) avg += current[n];
        avg = avg / static_cast<float>(ring[v].size());
        const Vec3 blended = current[v] * (1.f - weight) + avg * weight;
        const float len = length(blended);
        next[v] = len > 1e-20f ? blended / len : current[v];
      }
      std::swap(current, next);
    }
  }
  mesh.smoothed_normals = std::move(current);
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  f << "# relight mesh\n";
  char line[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    f << line;
  }
  const std::vector<Vec3>& vn =
      mesh.has_smoothed_normals() ? mesh.smoothed_normals : mesh.geometric_normals;
  for (const Vec3& n : vn) {
    std::snprintf(line, sizeof(line), "vn %.9g %.9g %.9g\n", n.x, n.y, n.z);
    f << line;
  }
  for (const auto& tri : mesh.triangles) {
    if (vn.empty())
      std::snprintf(line, sizeof(line), "f %u %u %u\n", tri[0] + 1, tri[1] + 1, tri[2] + 1);
    else
      std::snprintf(line, sizeof(line), "f %u//%u %u//%u %u//%u\n", tri[0] + 1, tri[0] + 1,
                    tri[1] + 1, tri[1] + 1, tri[2] + 1, tri[2] + 1);
    f << line;
  }
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error(path + ": cannot open for reading");
  TriangleMesh mesh;
  std::vector<Vec3> normals;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x >> v.y >> v.z;
      mesh.vertices.push_back(v);
    } else if (tag == "vn") {
      Vec3 n;
      ss >> n.x >> n.y >> n.z;
      normals.push_back(n);
    } else if (tag == "f") {
      std::vector<uint32_t> idx;
      std::string vert;
      while (ss >> vert) {
        // Accept "i", "i/t", "i//n", "i/t/n"; only the position index is used.
        idx.push_back(static_cast<uint32_t>(std::stoul(vert.substr(0, vert.find('/')))) - 1);
      }
      if (idx.size() < 3) throw std::runtime_error(path + ": face with fewer than 3 vertices");
      for (size_t i = 2; i < idx.size(); ++i)
        mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
    }
  }
  for (const auto& tri : mesh.triangles)
    for (const uint32_t vi : tri)
      if (vi >= mesh.vertices.size()) throw std::runtime_error(path + ": face index out of range");
  mesh.compute_geometric_normals();
  if (normals.size() == mesh.vertices.size()) mesh.smoothed_normals = std::move(normals);
  return mesh;
}

TriangleMesh make_uv_sphere(const Vec3& center, float radius, int stacks, int slices) {
  TriangleMesh m;
  for (int i = 0; i <= stacks; ++i) {
    const float theta = kPi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const float phi = kTwoPi * j / slices;
      const Vec3 n{std::sin(theta) * std::cos(phi), std::cos(theta),
                   std::sin(theta) * std::sin(phi)};
      m.vertices.push_back(center + n * radius);
    }
  }
  auto vid = [&](int i, int j) { return static_cast<uint32_t>(i * slices + (j % slices)); };
  for (int i = 0; i < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      if (i > 0) m.triangles.push_back({vid(i, j), vid(i, j + 1), vid(i + 1, j)});
      if (i < stacks - 1) m.triangles.push_back({vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)});
    }
  m.remove_degenerate_triangles();
  m.compute_geometric_normals();
  return m;
}

TriangleMesh make_box(const Vec3& center, const Vec3& half_extent) {
  TriangleMesh m;
  // 24 vertices (4 per face) so geometric normals stay face-flat.
  static const int faces[6][4][3] = {
      {{-1, -1, -1}, {-1, -1, 1}, {-1, 1, 1}, {-1, 1, -1}},  // -X
      {{1, -1, -1}, {1, 1, -1}, {1, 1, 1}, {1, -1, 1}},      // +X
      {{-1, -1, -1}, {1, -1, -1}, {1, -1, 1}, {-1, -1, 1}},  // -Y
      {{-1, 1, -1}, {-1, 1, 1}, {1, 1, 1}, {1, 1, -1}},      // +Y
      {{-1, -1, -1}, {-1, 1, -1}, {1, 1, -1}, {1, -1, -1}},  // -Z
      {{-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}},      // +Z
  };
  for (const auto& face : faces) {
    const uint32_t base = static_cast<uint32_t>(m.vertices.size());
    for (const auto& c : face)
      m.vertices.push_back(center + Vec3{half_extent.x * c[0], half_extent.y * c[1],
                                         half_extent.z * c[2]});
    m.triangles.push_back({base, base + 1, base + 2});
    m.triangles.push_back({base, base + 2, base + 3});
  }
  m.compute_geometric_normals();
  return m;
}

TriangleMesh make_icosphere(float radius, int subdivisions) {
  const float t = (1.f + std::sqrt(5.f)) / 2.f;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : m.vertices) v = normalize(v);

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoint;
    auto mid = [&](uint32_t a, uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const uint32_t id = static_cast<uint32_t>(m.vertices.size());
      m.vertices.push_back(normalize(m.vertices[a] + m.vertices[b]));
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<uint32_t, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const uint32_t ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (Vec3& v : m.vertices) v *= radius;
  m.compute_geometric_normals();
  return m;
}

void append_mesh(TriangleMesh& dst, const TriangleMesh& src) {
  const uint32_t base = static_cast<uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& tri : src.triangles)
    dst.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
  dst.compute_geometric_normals();
  if (dst.has_smoothed_normals() || src.has_smoothed_normals()) {
    if (dst.smoothed_normals.size() != base)
      dst.smoothed_normals.assign(dst.geometric_normals.begin(),
                                  dst.geometric_normals.begin() + base);
    const std::vector<Vec3>& sn =
        src.has_smoothed_normals() ? src.smoothed_normals : src.geometric_normals;
    dst.smoothed_normals.insert(dst.smoothed_normals.end(), sn.begin(), sn.end());
  }
}

}  // namespace relight
