// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/bvh.h"

#include <numeric>

namespace relight {

namespace {

constexpr int kLeafSize = 4;
constexpr int kNumBins = 16;

// Slab test; returns entry distance or infinity on a miss.
inline float box_entry(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, float t_max) {
  float t0 = 0.f, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    const float near = (box.lo[a] - origin[a]) * inv_dir[a];
    const float far = (box.hi[a] - origin[a]) * inv_dir[a];
    t0 = std::max(t0, std::min(near, far));
    t1 = std::min(t1, std::max(near, far));
  }
  return t0 <= t1 ? t0 : kInfinity;
}

// Interpolates both normal sets and flips them toward the ray origin.
void complete_hit(const TriangleMesh& mesh, const Ray& ray, Hit& hit) {
  const auto& idx = mesh.triangles[hit.triangle];
  hit.position = ray.origin + ray.dir * hit.t;

  const float w = 1.f - hit.bary_u - hit.bary_v;
  const Vec3 face_n = cross(mesh.vertices[idx[1]] - mesh.vertices[idx[0]],
                            mesh.vertices[idx[2]] - mesh.vertices[idx[0]]);
  hit.backface = dot(face_n, ray.dir) > 0.f;
  const float side = hit.backface ? -1.f : 1.f;
  hit.face_normal = normalize(face_n) * side;

  const auto& gn = mesh.geometric_normals;
  const Vec3 g = gn[idx[0]] * w + gn[idx[1]] * hit.bary_u + gn[idx[2]] * hit.bary_v;
  const float glen = length(g);
  hit.geometric_normal = glen > 1e-12f ? g * (side / glen) : normalize(face_n) * side;

  if (mesh.has_smoothed_normals()) {
    const auto& sn = mesh.smoothed_normals;
    const Vec3 s = sn[idx[0]] * w + sn[idx[1]] * hit.bary_u + sn[idx[2]] * hit.bary_v;
    const float slen = length(s);
    hit.smoothed_normal = slen > 1e-12f ? s * (side / slen) : hit.geometric_normal;
  } else {
    hit.smoothed_normal = hit.geometric_normal;
  }
}

}  // namespace

std::optional<Hit> intersect_triangle(const TriangleMesh& mesh, uint32_t tri, const Ray& ray,
                                      float t_min, float t_max) {
  const auto& idx = mesh.triangles[tri];
  const Vec3& p0 = mesh.vertices[idx[0]];
  const Vec3 e1 = mesh.vertices[idx[1]] - p0;
  const Vec3 e2 = mesh.vertices[idx[2]] - p0;
  const Vec3 pvec = cross(ray.dir, e2);
  const float det = dot(e1, pvec);
  if (det == 0.f) return std::nullopt;
  const float inv_det = 1.f / det;
  const Vec3 tvec = ray.origin - p0;
  const float u = dot(tvec, pvec) * inv_det;
  if (u < 0.f || u > 1.f) return std::nullopt;
  const Vec3 qvec = cross(tvec, e1);
  const float v = dot(ray.dir, qvec) * inv_det;
  if (v < 0.f || u + v > 1.f) return std::nullopt;
  const float t = dot(e2, qvec) * inv_det;
  if (t <= t_min || t >= t_max) return std::nullopt;

  Hit hit;
  hit.t = t;
  hit.triangle = tri;
  hit.bary_u = u;
  hit.bary_v = v;
  return hit;
}

Bvh::Bvh(const TriangleMesh& mesh) : mesh_(&mesh) {
  const size_t n = mesh.triangles.size();
  if (n == 0) return;

  std::vector<Aabb> prim_boxes(n);
  std::vector<Vec3> centroids(n);
  for (size_t i = 0; i < n; ++i) {
    Aabb b;
    for (const uint32_t vi : mesh.triangles[i]) b.expand(mesh.vertices[vi]);
    prim_boxes[i] = b;
    centroids[i] = b.center();
  }
  prim_order_.resize(n);
  std::iota(prim_order_.begin(), prim_order_.end(), 0u);
  nodes_.reserve(2 * n);
  build(prim_order_.data(), static_cast<uint32_t>(n), prim_boxes, centroids);
}

uint32_t Bvh::build(uint32_t* prims, uint32_t count, const std::vector<Aabb>& prim_boxes,
                    const std::vector<Vec3>& centroids) {
  const uint32_t node_id = static_cast<uint32_t>(nodes_.size());
  nodes_.emplace_back();

  Aabb box, centroid_box;
  for (uint32_t i = 0; i < count; ++i) {
    box.expand(prim_boxes[prims[i]]);
    centroid_box.expand(centroids[prims[i]]);
  }
  nodes_[node_id].box = box;

  const Vec3 extent = centroid_box.extent();
  const int axis = extent.x > extent.y ? (extent.x > extent.z ? 0 : 2)
                                       : (extent.y > extent.z ? 1 : 2);
  if (count <= kLeafSize || extent[axis] <= 0.f) {
    nodes_[node_id].first = static_cast<uint32_t>(prims - prim_order_.data());
    nodes_[node_id].count = static_cast<uint16_t>(count);
    return node_id;
  }

  // Binned SAH split along the widest centroid axis.
  struct Bin {
    Aabb box;
    uint32_t count = 0;
  };
  Bin bins[kNumBins];
  const float scale = kNumBins / extent[axis];
  auto bin_of = [&](uint32_t prim) {
    const int b = static_cast<int>((centroids[prim][axis] - centroid_box.lo[axis]) * scale);
    return std::clamp(b, 0, kNumBins - 1);
  };
  for (uint32_t i = 0; i < count; ++i) {
    Bin& b = bins[bin_of(prims[i])];
    b.box.expand(prim_boxes[prims[i]]);
    b.count++;
  }

  float left_area[kNumBins - 1], right_area[kNumBins - 1];
  uint32_t left_count[kNumBins - 1], right_count[kNumBins - 1];
  Aabb acc;
  uint32_t cnt = 0;
  for (int i = 0; i < kNumBins - 1; ++i) {
    acc.expand(bins[i].box);
    cnt += bins[i].count;
    left_area[i] = acc.surface_area();
    left_count[i] = cnt;
  }
  acc = Aabb{};
  cnt = 0;
  for (int i = kNumBins - 1; i >= 1; --i) {
    acc.expand(bins[i].box);
    cnt += bins[i].count;
    right_area[i - 1] = acc.surface_area();
    right_count[i - 1] = cnt;
  }
  int best_split = -1;
  float best_cost = kInfinity;
  for (int i = 0; i < kNumBins - 1; ++i) {
    if (left_count[i] == 0 || right_count[i] == 0) continue;
    const float cost = left_area[i] * left_count[i] + right_area[i] * right_count[i];
    if (cost < best_cost) {
      best_cost = cost;
      best_split = i;
    }
  }
  uint32_t mid;
  if (best_split < 0) {
    mid = count / 2;  // all centroids in one bin: median fallback
    std::nth_element(prims, prims + mid, prims + count, [&](uint32_t a, uint32_t b) {
      return centroids[a][axis] < centroids[b][axis] ||
             (centroids[a][axis] == centroids[b][axis] && a < b);
    });
  } else {
    auto* split = std::partition(prims, prims + count,
                                 [&](uint32_t p) { return bin_of(p) <= best_split; });
    mid = static_cast<uint32_t>(split - prims);
    if (mid == 0 || mid == count) {
      mid = count / 2;
      std::nth_element(prims, prims + mid, prims + count, [&](uint32_t a, uint32_t b) {
        return centroids[a][axis] < centroids[b][axis] ||
               (centroids[a][axis] == centroids[b][axis] && a < b);
      });
    }
  }

  nodes_[node_id].axis = static_cast<uint16_t>(axis);
  build(prims, mid, prim_boxes, centroids);  // left child sits at node_id + 1
  const uint32_t right = build(prims + mid, count - mid, prim_boxes, centroids);
  nodes_[node_id].first = right;
  nodes_[node_id].count = 0;
  return node_id;
}

std::optional<Hit> Bvh::intersect(const Ray& ray, float t_min, float t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};

  Hit best;
  best.t = t_max;
  bool found = false;

  uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const uint32_t node_id = stack[--sp];
    const Node& node = nodes_[node_id];
    // Prune misses and strictly-farther boxes; equal-t ties still resolve by id.
    const float entry = box_entry(node.box, ray.origin, inv_dir, best.t);
    if (entry == kInfinity || entry > best.t) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i) {
        const uint32_t tri = prim_order_[node.first + i];
        if (auto hit = intersect_triangle(*mesh_, tri, ray, t_min, t_max)) {
          if (hit->t < best.t || (hit->t == best.t && (!found || hit->triangle < best.triangle))) {
            best = *hit;
            found = true;
          }
        }
      }
    } else {
      const uint32_t left = node_id + 1, right = node.first;
      const bool left_near = ray.dir[node.axis] >= 0.f;
      // Push the far child first so the near child pops first.
      stack[sp++] = left_near ? right : left;
      stack[sp++] = left_near ? left : right;
    }
  }
  if (!found || best.t >= t_max) return std::nullopt;
  complete_hit(*mesh_, ray, best);
  return best;
}

bool Bvh::occluded(const Ray& ray, float t_min, float t_max) const {
  if (nodes_.empty()) return false;
  const Vec3 inv_dir{1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z};
  uint32_t stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const uint32_t node_id = stack[--sp];
    const Node& node = nodes_[node_id];
    if (box_entry(node.box, ray.origin, inv_dir, t_max) == kInfinity) continue;
    if (node.count > 0) {
      for (uint32_t i = 0; i < node.count; ++i)
        if (intersect_triangle(*mesh_, prim_order_[node.first + i], ray, t_min, t_max))
          return true;
    } else {
      stack[sp++] = node.first;
      stack[sp++] = node_id + 1;
    }
  }
  return false;
}

std::optional<Hit> intersect_brute_force(const TriangleMesh& mesh, const Ray& ray, float t_min,
                                         float t_max) {
  Hit best;
  best.t = t_max;
  bool found = false;
  for (uint32_t tri = 0; tri < mesh.triangles.size(); ++tri) {
    if (auto hit = intersect_triangle(mesh, tri, ray, t_min, t_max)) {
      if (hit->t < best.t || (hit->t == best.t && (!found || hit->triangle < best.triangle))) {
        best = *hit;
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  complete_hit(mesh, ray, best);
  return best;
}

}  // namespace relight
