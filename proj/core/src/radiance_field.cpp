// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/field/radiance_field.h"

#include <stdexcept>

#include "field_internal.h"
#include "relight/parallel.h"

namespace relight::field {

namespace {

float uniform_init(Pcg32& rng, float scale) { return (rng.next_float() * 2.f - 1.f) * scale; }

}  // namespace

RadianceFieldParams::RadianceFieldParams(const FieldConfig& config, uint64_t init_seed)
    : config_(config) {
  const int fd = config.density_features, fa = config.appearance_features;
  if (fd > internal::kMaxFeatures || fa > internal::kMaxFeatures)
    throw std::invalid_argument("feature dims exceed the compiled cap");
  if (config.hidden_width > 64 || config.bottleneck_width > 16 || config.normal_hidden > 32)
    throw std::invalid_argument("network widths exceed the compiled caps");

  // Grid tensors first: the sparse-gradient region.
  for (int l = 0; l < 2; ++l) {
    const int r = config.grid_levels[l];
    add_tensor("density_grid" + std::to_string(l), {r, r, r, fd});
  }
  for (int l = 0; l < 2; ++l) {
    const int r = config.grid_levels[l];
    add_tensor("appearance_grid" + std::to_string(l), {r, r, r, fa});
  }
  const int h = config.hidden_width, bn = config.bottleneck_width, nh = config.normal_hidden;
  const int in_dim = 2 * fd, app_in = 2 * fa;
  const int head_in = bn + config.dir_encoding_dims();
  add_tensor("density_w", {in_dim});
  add_tensor("density_b", {1});
  add_tensor("app_w1", {h, app_in});
  add_tensor("app_b1", {h});
  add_tensor("app_w2", {h, h});
  add_tensor("app_b2", {h});
  add_tensor("app_w3", {bn, h});
  add_tensor("app_b3", {bn});
  add_tensor("head_w1", {h, head_in});
  add_tensor("head_b1", {h});
  add_tensor("head_w2", {3, h});
  add_tensor("head_b2", {3});
  add_tensor("normal_w1", {nh, in_dim});
  add_tensor("normal_b1", {nh});
  add_tensor("normal_w2", {3, nh});
  add_tensor("normal_b2", {3});

  // Grids start empty; decoders get small symmetric inits. The density bias
  // starts strongly negative so the volume begins nearly transparent.
  Pcg32 rng = make_stream(init_seed, 0x696e6974ull);
  auto init_span = [&](const std::string& name, float scale) {
    for (float& v : tensor(name)) v = uniform_init(rng, scale);
  };
  init_span("density_w", 0.3f);
  tensor("density_b")[0] = -4.f;
  init_span("app_w1", std::sqrt(6.f / app_in));
  init_span("app_w2", std::sqrt(6.f / h));
  init_span("app_w3", std::sqrt(6.f / h));
  init_span("head_w1", std::sqrt(6.f / head_in));
  init_span("head_w2", 0.3f);
  init_span("normal_w1", std::sqrt(6.f / in_dim));
  init_span("normal_w2", 0.3f);
  tensor("normal_b2")[1] = 1.f;  // predicted normals start near world up
}

void RadianceFieldParams::add_tensor(const std::string& name, std::vector<int> shape) {
  TensorView view;
  view.name = name;
  view.offset = values_.size();
  view.shape = std::move(shape);
  view.size = 1;
  for (const int d : view.shape) view.size *= static_cast<size_t>(d);
  values_.resize(view.offset + view.size, 0.f);
  tensors_.push_back(std::move(view));
}

std::span<float> RadianceFieldParams::tensor(const std::string& name) {
  const TensorView& v = view(name);
  return {values_.data() + v.offset, v.size};
}

std::span<const float> RadianceFieldParams::tensor(const std::string& name) const {
  const TensorView& v = view(name);
  return {values_.data() + v.offset, v.size};
}

const TensorView& RadianceFieldParams::view(const std::string& name) const {
  for (const TensorView& v : tensors_)
    if (v.name == name) return v;
  throw std::out_of_range("no tensor named " + name);
}

bool RadianceFieldParams::is_geometry_param(size_t flat_index) const {
  for (const TensorView& v : tensors_) {
    if (flat_index < v.offset || flat_index >= v.offset + v.size) continue;
    return v.name.starts_with("density_") || v.name.starts_with("normal_");
  }
  return false;
}

bool RadianceFieldParams::is_appearance_param(size_t flat_index) const {
  for (const TensorView& v : tensors_) {
    if (flat_index < v.offset || flat_index >= v.offset + v.size) continue;
    return v.name.starts_with("appearance_") || v.name.starts_with("app_") ||
           v.name.starts_with("head_");
  }
  return false;
}

bool RadianceFieldParams::all_finite() const {
  for (const float v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void sh_encode(const Vec3& d, int bands, float* out) {
  const float x = d.x, y = d.y, z = d.z;
  out[0] = 0.282095f;
  if (bands < 2) return;
  out[1] = 0.488603f * y;
  out[2] = 0.488603f * z;
  out[3] = 0.488603f * x;
  if (bands < 3) return;
  out[4] = 1.092548f * x * y;
  out[5] = 1.092548f * y * z;
  out[6] = 0.315392f * (3.f * z * z - 1.f);
  out[7] = 1.092548f * x * z;
  out[8] = 0.546274f * (x * x - y * y);
  if (bands < 4) return;
  out[9] = 0.590044f * y * (3.f * x * x - y * y);
  out[10] = 2.890611f * x * y * z;
  out[11] = 0.457046f * y * (4.f * z * z - x * x - y * y);
  out[12] = 0.373176f * z * (2.f * z * z - 3.f * x * x - 3.f * y * y);
  out[13] = 0.457046f * x * (4.f * z * z - x * x - y * y);
  out[14] = 1.445306f * z * (x * x - y * y);
  out[15] = 0.590044f * x * (x * x - y * y);
}

}  // namespace relight::field

// ---------------------------------------------------------------------------
// Internal per-ray machinery.
// ---------------------------------------------------------------------------

namespace relight::field::internal {

ParamLayout ParamLayout::resolve(const RadianceFieldParams& params) {
  ParamLayout l{};
  auto off = [&](const std::string& name) { return params.view(name).offset; };
  for (int i = 0; i < kLevels; ++i) {
    l.density_grid[i] = off("density_grid" + std::to_string(i));
    l.appearance_grid[i] = off("appearance_grid" + std::to_string(i));
    l.grid_res[i] = params.config().grid_levels[i];
  }
  l.density_w = off("density_w");
  l.density_b = off("density_b");
  l.app_w1 = off("app_w1");
  l.app_b1 = off("app_b1");
  l.app_w2 = off("app_w2");
  l.app_b2 = off("app_b2");
  l.app_w3 = off("app_w3");
  l.app_b3 = off("app_b3");
  l.head_w1 = off("head_w1");
  l.head_b1 = off("head_b1");
  l.head_w2 = off("head_w2");
  l.head_b2 = off("head_b2");
  l.normal_w1 = off("normal_w1");
  l.normal_b1 = off("normal_b1");
  l.normal_w2 = off("normal_w2");
  l.normal_b2 = off("normal_b2");
  l.grid_region_end = off("density_w");
  return l;
}

namespace {

// Ray/box intersection over the field bounds.
bool bounds_range(const Aabb& box, const Ray& ray, float* t0, float* t1) {
  float lo = 1e-4f, hi = kInfinity;
  for (int a = 0; a < 3; ++a) {
    const float inv = 1.f / ray.dir[a];
    float tn = (box.lo[a] - ray.origin[a]) * inv;
    float tf = (box.hi[a] - ray.origin[a]) * inv;
    if (tn > tf) std::swap(tn, tf);
    lo = std::max(lo, tn);
    hi = std::min(hi, tf);
  }
  if (lo >= hi) return false;
  *t0 = lo;
  *t1 = hi;
  return true;
}

}  // namespace

void make_corner_cache(const Aabb& bounds, int res, const Vec3& pos, CornerCache& cc) {
  const Vec3 ext = bounds.extent();
  float g[3], scale[3];
  const float p[3] = {pos.x, pos.y, pos.z};
  const float lo[3] = {bounds.lo.x, bounds.lo.y, bounds.lo.z};
  const float e[3] = {ext.x, ext.y, ext.z};
  int cell[3];
  float frac[3];
  for (int a = 0; a < 3; ++a) {
    scale[a] = (res - 1) / e[a];
    g[a] = (p[a] - lo[a]) * scale[a];
    // Clamp to the border; clamped axes contribute no positional gradient.
    if (g[a] <= 0.f) {
      g[a] = 0.f;
      scale[a] = 0.f;
    } else if (g[a] >= res - 1) {
      g[a] = static_cast<float>(res - 1);
      scale[a] = 0.f;
    }
    cell[a] = std::min(static_cast<int>(g[a]), res - 2);
    frac[a] = g[a] - cell[a];
  }
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const float wx = dx ? frac[0] : 1.f - frac[0];
    const float wy = dy ? frac[1] : 1.f - frac[1];
    const float wz = dz ? frac[2] : 1.f - frac[2];
    cc.corner[c] = (static_cast<uint32_t>(cell[2] + dz) * res + (cell[1] + dy)) * res +
                   (cell[0] + dx);
    cc.weight[c] = wx * wy * wz;
    cc.dwdx[c] = (dx ? 1.f : -1.f) * scale[0] * wy * wz;
    cc.dwdy[c] = (dy ? 1.f : -1.f) * scale[1] * wx * wz;
    cc.dwdz[c] = (dz ? 1.f : -1.f) * scale[2] * wx * wy;
  }
}

void gather_features(const float* values, size_t tensor_offset, const CornerCache& cc, int f_dim,
                     float* out) {
  for (int k = 0; k < f_dim; ++k) out[k] = 0.f;
  for (int c = 0; c < 8; ++c) {
    const float* v = values + tensor_offset + static_cast<size_t>(cc.corner[c]) * f_dim;
    const float w = cc.weight[c];
    for (int k = 0; k < f_dim; ++k) out[k] += w * v[k];
  }
}

namespace {

inline float softplus(float x) { return x > 20.f ? x : std::log1p(std::exp(x)); }
inline float sigmoid(float x) { return 1.f / (1.f + std::exp(-x)); }

// y = W x + b, W is (out x in) row-major.
void affine(const float* w, const float* b, const float* x, int in, int out, float* y) {
  for (int o = 0; o < out; ++o) {
    float acc = b ? b[o] : 0.f;
    const float* row = w + static_cast<size_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void relu_inplace(float* x, int n) {
  for (int i = 0; i < n; ++i) x[i] = x[i] > 0.f ? x[i] : 0.f;
}

}  // namespace

// Density pre-activation u at a sample, optionally coarse (level 0 only).
float density_u(const RadianceFieldParams& params, const ParamLayout& layout,
                const SampleCache& sc, bool coarse_only) {
  const float* vals = params.values().data();
  const int fd = params.config().density_features;
  float u = vals[layout.density_b];
  const float* w = vals + layout.density_w;
  const int levels = coarse_only ? 1 : kLevels;
  for (int l = 0; l < levels; ++l)
    for (int k = 0; k < fd; ++k) u += w[l * fd + k] * sc.fd[l * kMaxFeatures + k];
  return u;
}

namespace {

void eval_normal_mlp(const RadianceFieldParams& params, const ParamLayout& layout,
                     const float fd[], float* hidden, Vec3* raw, Vec3* unit) {
  const float* vals = params.values().data();
  const int in_dim = 2 * params.config().density_features;
  const int nh = params.config().normal_hidden;
  float packed[2 * kMaxFeatures];
  const int fdim = params.config().density_features;
  for (int l = 0; l < kLevels; ++l)
    for (int k = 0; k < fdim; ++k) packed[l * fdim + k] = fd[l * kMaxFeatures + k];
  affine(vals + layout.normal_w1, vals + layout.normal_b1, packed, in_dim, nh, hidden);
  relu_inplace(hidden, nh);
  float out[3];
  affine(vals + layout.normal_w2, vals + layout.normal_b2, hidden, nh, 3, out);
  *raw = {out[0], out[1], out[2]};
  const float len = length(*raw);
  *unit = len > 1e-12f ? *raw / len : Vec3{0.f, 1.f, 0.f};
}

}  // namespace

void forward_ray(const RadianceFieldParams& params, const ParamLayout& layout,
                 const LatentTable* latents, int latent_row, const Ray& ray, int64_t ray_id,
                 const ForwardOptions& opt, RayForward& fwd) {
  const FieldConfig& cfg = params.config();
  const float* vals = params.values().data();
  const int fd = cfg.density_features, fa = cfg.appearance_features;
  const int n_c = cfg.coarse_samples, n_f = cfg.fine_samples;

  fwd.color = cfg.background;
  fwd.weight_sum = 0.f;
  fwd.bg_weight = 1.f;
  fwd.samples.clear();
  if (opt.cached != nullptr) {
    fwd.valid = true;
    const int m = static_cast<int>(opt.cached->ts.size());
    fwd.samples.resize(m);
    for (int i = 0; i < m; ++i) {
      SampleCache& sc = fwd.samples[i];
      sc.t = opt.cached->ts[i];
      sc.position = ray.origin + ray.dir * sc.t;
      sc.weight = opt.cached->weights[i];
      for (int l = 0; l < kLevels; ++l)
        make_corner_cache(cfg.bounds, layout.grid_res[l], sc.position, sc.cells[l]);
      fwd.weight_sum += sc.weight;
    }
    fwd.bg_weight = opt.cached->bg_weight;
  } else {
    fwd.valid = bounds_range(cfg.bounds, ray, &fwd.t_enter, &fwd.t_exit);
  }
  if (!fwd.valid) return;

  Pcg32 rng = make_stream(opt.seed, 0x5261795eull, static_cast<uint64_t>(opt.step),
                          static_cast<uint64_t>(ray_id));

  // Proposal round: stratified coarse samples against the coarse grid level.
  if (opt.cached != nullptr) {
    // Density path skipped entirely; weights came from the bake.
  } else if (opt.frozen_fine_ts == nullptr) {
    fwd.coarse_ts.resize(n_c);
    fwd.coarse_sigma.resize(n_c);
    const float span = fwd.t_exit - fwd.t_enter;
    for (int i = 0; i < n_c; ++i) {
      const float xi = opt.jitter ? rng.next_float() : 0.5f;
      fwd.coarse_ts[i] = fwd.t_enter + span * (i + xi) / n_c;
    }
    SampleCache probe;
    for (int i = 0; i < n_c; ++i) {
      probe.position = ray.origin + ray.dir * fwd.coarse_ts[i];
      make_corner_cache(cfg.bounds, layout.grid_res[0], probe.position, probe.cells[0]);
      gather_features(vals, layout.density_grid[0], probe.cells[0], fd, probe.fd);
      fwd.coarse_sigma[i] = cfg.density_scale * softplus(density_u(params, layout, probe, true));
    }

    // Inverse-CDF resampling of the coarse weights (with a small uniform
    // floor); sample positions are treated as constants by the backward
    // pass, the usual stop-gradient through resampling.
    float cdf_w[512];
    float transmittance = 1.f;
    float total = 0.f;
    for (int i = 0; i < n_c; ++i) {
      const float t_next = i + 1 < n_c ? fwd.coarse_ts[i + 1] : fwd.t_exit;
      const float delta = std::max(0.f, t_next - fwd.coarse_ts[i]);
      const float alpha = 1.f - std::exp(-fwd.coarse_sigma[i] * delta);
      cdf_w[i] = transmittance * alpha + 0.01f / n_c;
      transmittance *= 1.f - alpha;
      total += cdf_w[i];
    }
    for (int i = 0; i < n_c; ++i) cdf_w[i] /= total;

    fwd.fine_ts.resize(n_f);
    int bin = 0;
    float cdf_lo = 0.f;
    for (int j = 0; j < n_f; ++j) {
      const float xi = opt.jitter ? rng.next_float() : 0.5f;
      const float u = (j + xi) / n_f;
      while (bin + 1 < n_c && cdf_lo + cdf_w[bin] < u) cdf_lo += cdf_w[bin++];
      const float frac = cdf_w[bin] > 0.f ? (u - cdf_lo) / cdf_w[bin] : 0.5f;
      const float t_lo = fwd.coarse_ts[bin];
      const float t_hi = bin + 1 < n_c ? fwd.coarse_ts[bin + 1] : fwd.t_exit;
      fwd.fine_ts[j] = t_lo + clamp(frac, 0.f, 1.f) * (t_hi - t_lo);
    }
  } else {
    fwd.fine_ts = *opt.frozen_fine_ts;
  }

  // Fine pass.
  if (opt.cached == nullptr) {
  const int m = static_cast<int>(fwd.fine_ts.size());
  fwd.samples.resize(m);
  float transmittance = 1.f;
  for (int i = 0; i < m; ++i) {
    SampleCache& sc = fwd.samples[i];
    sc.t = fwd.fine_ts[i];
    const float t_next = i + 1 < m ? fwd.fine_ts[i + 1] : fwd.t_exit;
    sc.delta = std::max(0.f, t_next - sc.t);
    sc.position = ray.origin + ray.dir * sc.t;
    for (int l = 0; l < kLevels; ++l) {
      make_corner_cache(cfg.bounds, layout.grid_res[l], sc.position, sc.cells[l]);
      gather_features(vals, layout.density_grid[l], sc.cells[l], fd, sc.fd + l * kMaxFeatures);
    }
    sc.u = density_u(params, layout, sc, false);
    sc.sigma = cfg.density_scale * softplus(sc.u);
    sc.alpha = 1.f - std::exp(-sc.sigma * sc.delta);
    sc.transmittance = transmittance;
    sc.weight = transmittance * sc.alpha;
    transmittance *= 1.f - sc.alpha;
    fwd.weight_sum += sc.weight;
  }
  fwd.bg_weight = 1.f - fwd.weight_sum;
  }

  // Latent modulation, once per ray.
  const bool modulated = latents != nullptr && latents->dim() > 0 && latent_row >= 0;
  const int bn = cfg.bottleneck_width;
  if (modulated) {
    fwd.mod_hidden.resize(latents->hidden());
    fwd.mod_out.resize(2 * bn);
    latents->modulation(latents->code(latent_row), fwd.mod_hidden.data(), fwd.mod_out.data());
  } else {
    fwd.mod_out.assign(2 * bn, 0.f);
  }

  const int sh_dims = cfg.dir_encoding_dims();
  fwd.sh.resize(sh_dims);
  sh_encode(ray.dir, cfg.sh_bands, fwd.sh.data());

  if (!opt.want_appearance) return;

  const int h = cfg.hidden_width;
  Vec3 color_acc{};
  const int m_all = static_cast<int>(fwd.samples.size());
  for (int i = 0; i < m_all; ++i) {
    SampleCache& sc = fwd.samples[i];
    sc.live = opt.cached != nullptr || sc.weight > opt.weight_cutoff;
  }
  if (opt.cached == nullptr && opt.max_live > 0 && m_all > opt.max_live) {
    // Keep only the top-K weights; ties break toward the earlier sample.
    std::vector<std::pair<float, int>> order(m_all);
    for (int i = 0; i < m_all; ++i) order[i] = {fwd.samples[i].weight, -i};
    std::nth_element(order.begin(), order.begin() + opt.max_live - 1, order.end(),
                     std::greater<>());
    const float floor_w = order[opt.max_live - 1].first;
    const int floor_i = -order[opt.max_live - 1].second;
    int kept = 0;
    for (int i = 0; i < m_all; ++i) {
      SampleCache& sc = fwd.samples[i];
      if (sc.weight < floor_w || (sc.weight == floor_w && i > floor_i)) sc.live = false;
      kept += sc.live;
      if (kept > opt.max_live) sc.live = false;
    }
  }
  for (int i = 0; i < m_all; ++i) {
    SampleCache& sc = fwd.samples[i];
    if (!sc.live) continue;

    for (int l = 0; l < kLevels; ++l)
      gather_features(vals, layout.appearance_grid[l], sc.cells[l], fa, sc.fa + l * kMaxFeatures);

    float packed[2 * kMaxFeatures];
    for (int l = 0; l < kLevels; ++l)
      for (int k = 0; k < fa; ++k) packed[l * fa + k] = sc.fa[l * kMaxFeatures + k];

    sc.h1.resize(h);
    sc.h2.resize(h);
    sc.bottleneck.resize(bn);
    affine(vals + layout.app_w1, vals + layout.app_b1, packed, 2 * fa, h, sc.h1.data());
    relu_inplace(sc.h1.data(), h);
    affine(vals + layout.app_w2, vals + layout.app_b2, sc.h1.data(), h, h, sc.h2.data());
    relu_inplace(sc.h2.data(), h);
    affine(vals + layout.app_w3, vals + layout.app_b3, sc.h2.data(), h, bn, sc.bottleneck.data());

    // Element-wise scale and shift; identity at Z = 0 by construction.
    sc.modulated.resize(bn);
    for (int k = 0; k < bn; ++k)
      sc.modulated[k] = sc.bottleneck[k] * (1.f + fwd.mod_out[k]) + fwd.mod_out[bn + k];

    float head_in[16 + 16];
    for (int k = 0; k < bn; ++k) head_in[k] = sc.modulated[k];
    for (int k = 0; k < sh_dims; ++k) head_in[bn + k] = fwd.sh[k];

    sc.head_h.resize(h);
    sc.rgb_pre.resize(3);
    affine(vals + layout.head_w1, vals + layout.head_b1, head_in, bn + sh_dims, h,
           sc.head_h.data());
    relu_inplace(sc.head_h.data(), h);
    affine(vals + layout.head_w2, vals + layout.head_b2, sc.head_h.data(), h, 3,
           sc.rgb_pre.data());
    sc.color = {sigmoid(sc.rgb_pre[0]), sigmoid(sc.rgb_pre[1]), sigmoid(sc.rgb_pre[2])};
    color_acc += sc.color * sc.weight;

    if (opt.compute_normals) {
      // Density normal from the analytic gradient of the trilinear field.
      Vec3 grad{};
      const float* w = vals + layout.density_w;
      for (int l = 0; l < kLevels; ++l) {
        const CornerCache& cc = sc.cells[l];
        for (int k = 0; k < fd; ++k) {
          Vec3 gk{};
          for (int c = 0; c < 8; ++c) {
            const float v =
                vals[layout.density_grid[l] + static_cast<size_t>(cc.corner[c]) * fd + k];
            gk += Vec3{cc.dwdx[c], cc.dwdy[c], cc.dwdz[c]} * v;
          }
          grad += gk * w[l * fd + k];
        }
      }
      sc.grad_u = grad;
      const float glen = length(grad);
      sc.density_normal = glen > 1e-8f
                              ? grad * (-1.f / glen)
                              : (i > 0 ? fwd.samples[i - 1].density_normal : Vec3{0.f, 1.f, 0.f});

      sc.nh.resize(cfg.normal_hidden);
      eval_normal_mlp(params, layout, sc.fd, sc.nh.data(), &sc.pred_raw, &sc.pred_normal);

      if (opt.sigma_perturb > 0.f) {
        // Independent stream so frozen-position evaluations reuse the same
        // perturbations regardless of how many jitter draws happened.
        Pcg32 eps_rng = make_stream(opt.seed, 0xe9531ull, static_cast<uint64_t>(opt.step),
                                    static_cast<uint64_t>(ray_id), static_cast<uint64_t>(i));
        sc.eps = {eps_rng.next_normal() * opt.sigma_perturb,
                  eps_rng.next_normal() * opt.sigma_perturb,
                  eps_rng.next_normal() * opt.sigma_perturb};
        const Vec3 pp = sc.position + sc.eps;
        for (int l = 0; l < kLevels; ++l) {
          make_corner_cache(cfg.bounds, layout.grid_res[l], pp, sc.cells_p[l]);
          gather_features(vals, layout.density_grid[l], sc.cells_p[l], fd,
                          sc.fd_p + l * kMaxFeatures);
        }
        sc.nh_p.resize(cfg.normal_hidden);
        eval_normal_mlp(params, layout, sc.fd_p, sc.nh_p.data(), &sc.pred_raw_p,
                        &sc.pred_normal_p);
      } else {
        sc.pred_normal_p = sc.pred_normal;
      }
    }
  }
  fwd.color = color_acc + cfg.background * fwd.bg_weight;
}

NormalLossValues normal_loss_values(const RayForward& fwd, const RegularizerConfig& reg) {
  NormalLossValues out;
  for (const SampleCache& sc : fwd.samples) {
    if (!sc.live) continue;
    const Vec3 d = sc.density_normal - sc.pred_normal;
    const float r = length_squared(d);
    out.lp += (reg.lambda1 + reg.lambda2 + reg.lambda3) * sc.weight * r;
    out.ls += reg.lambda4 * sc.weight * length_squared(sc.pred_normal_p - sc.pred_normal);
  }
  return out;
}

namespace {

// dL/draw for a normalized vector: d(unit)/d(raw) = (I - u u^T)/len.
Vec3 normalize_backward(const Vec3& raw, const Vec3& unit, const Vec3& d_unit) {
  const float len = length(raw);
  if (len <= 1e-12f) return Vec3{};
  return (d_unit - unit * dot(unit, d_unit)) / len;
}

// y = relu(W x + b): given dL/dy (already masked), accumulate dW, db, dx.
void affine_backward(const float* w, const float* x, const float* dy, int in, int out, float* dw,
                     float* db, float* dx) {
  for (int o = 0; o < out; ++o) {
    const float g = dy[o];
    if (db) db[o] += g;
    if (g == 0.f) continue;
    const float* row = w + static_cast<size_t>(o) * in;
    float* drow = dw + static_cast<size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      drow[i] += g * x[i];
      if (dx) dx[i] += g * row[i];
    }
  }
}

}  // namespace

void backward_ray(const RadianceFieldParams& params, const ParamLayout& layout,
                  const LatentTable* latents, int latent_row, const Ray& ray,
                  const RayForward& fwd, const BackwardLossSpec& spec, GradSink& sink) {
  (void)ray;
  if (!fwd.valid) return;
  const FieldConfig& cfg = params.config();
  const float* vals = params.values().data();
  const int fd = cfg.density_features, fa = cfg.appearance_features;
  const int h = cfg.hidden_width, bn = cfg.bottleneck_width, nh = cfg.normal_hidden;
  const int sh_dims = cfg.dir_encoding_dims();
  const int m = static_cast<int>(fwd.samples.size());
  const RegularizerConfig* reg = spec.reg;

  auto dense = [&](size_t flat) -> float& { return sink.dense[flat - layout.grid_region_end]; };
  auto push_grid = [&](size_t tensor_offset, uint32_t corner, int f_dim, int k, float g) {
    sink.grid.emplace_back(
        static_cast<uint32_t>(tensor_offset + static_cast<size_t>(corner) * f_dim + k), g);
  };

  const bool modulated = latents != nullptr && latents->dim() > 0 && latent_row >= 0;
  std::vector<float> d_mod_out(2 * bn, 0.f);

  // dL/d omega_i, filled per sample; sigma backward runs afterwards.
  std::vector<float> d_omega(m, 0.f);

  for (int i = 0; i < m; ++i) {
    const SampleCache& sc = fwd.samples[i];
    const Vec3 c_i = sc.live ? sc.color : Vec3{};
    if (spec.recon) d_omega[i] = dot(spec.d_color, c_i - cfg.background);
    if (!sc.live) continue;

    // ---- color path ----
    if (spec.recon && (spec.appearance_params || modulated)) {
      const Vec3 dc = spec.d_color * sc.weight;
      float d_pre[3];
      for (int k = 0; k < 3; ++k) {
        const float s = sc.color[k];
        d_pre[k] = dc[k] * s * (1.f - s);
      }
      float d_head_h[64] = {};
      {
        // head_w2 backward
        float* dw = spec.appearance_params ? &dense(layout.head_w2) : nullptr;
        for (int o = 0; o < 3; ++o) {
          const float g = d_pre[o];
          if (spec.appearance_params) {
            dense(layout.head_b2 + o) += g;
            for (int i2 = 0; i2 < h; ++i2) dw[o * h + i2] += g * sc.head_h[i2];
          }
          const float* row = vals + layout.head_w2 + static_cast<size_t>(o) * h;
          for (int i2 = 0; i2 < h; ++i2) d_head_h[i2] += g * row[i2];
        }
      }
      for (int i2 = 0; i2 < h; ++i2)
        if (sc.head_h[i2] <= 0.f) d_head_h[i2] = 0.f;

      float head_in[32];
      for (int k = 0; k < bn; ++k) head_in[k] = sc.modulated[k];
      for (int k = 0; k < sh_dims; ++k) head_in[bn + k] = fwd.sh[k];
      float d_head_in[32] = {};
      {
        const int in_dim = bn + sh_dims;
        for (int o = 0; o < h; ++o) {
          const float g = d_head_h[o];
          if (g == 0.f) continue;
          if (spec.appearance_params) {
            dense(layout.head_b1 + o) += g;
            float* dw = &dense(layout.head_w1) + static_cast<size_t>(o) * in_dim;
            for (int i2 = 0; i2 < in_dim; ++i2) dw[i2] += g * head_in[i2];
          }
          const float* row = vals + layout.head_w1 + static_cast<size_t>(o) * in_dim;
          for (int i2 = 0; i2 < in_dim; ++i2) d_head_in[i2] += g * row[i2];
        }
      }

      // Modulation: b' = b (1 + s) + t.
      float d_bottleneck[16];
      for (int k = 0; k < bn; ++k) {
        const float db_mod = d_head_in[k];
        d_bottleneck[k] = db_mod * (1.f + fwd.mod_out[k]);
        if (modulated) {
          d_mod_out[k] += db_mod * sc.bottleneck[k];  // scale_raw
          d_mod_out[bn + k] += db_mod;                // shift
        }
      }

      if (spec.appearance_params) {
        float packed[2 * kMaxFeatures];
        for (int l = 0; l < kLevels; ++l)
          for (int k = 0; k < fa; ++k) packed[l * fa + k] = sc.fa[l * kMaxFeatures + k];

        float d_h2[64] = {};
        affine_backward(vals + layout.app_w3, sc.h2.data(), d_bottleneck, h, bn,
                        &dense(layout.app_w3), &dense(layout.app_b3), d_h2);
        for (int i2 = 0; i2 < h; ++i2)
          if (sc.h2[i2] <= 0.f) d_h2[i2] = 0.f;
        float d_h1[64] = {};
        affine_backward(vals + layout.app_w2, sc.h1.data(), d_h2, h, h, &dense(layout.app_w2),
                        &dense(layout.app_b2), d_h1);
        for (int i2 = 0; i2 < h; ++i2)
          if (sc.h1[i2] <= 0.f) d_h1[i2] = 0.f;
        float d_packed[2 * kMaxFeatures] = {};
        affine_backward(vals + layout.app_w1, packed, d_h1, 2 * fa, h, &dense(layout.app_w1),
                        &dense(layout.app_b1), d_packed);

        // Scatter appearance-feature gradients into the grids.
        for (int l = 0; l < kLevels; ++l) {
          const CornerCache& cc = sc.cells[l];
          for (int c = 0; c < 8; ++c) {
            const float w = cc.weight[c];
            if (w == 0.f) continue;
            for (int k = 0; k < fa; ++k) {
              const float g = d_packed[l * fa + k] * w;
              if (g != 0.f) push_grid(layout.appearance_grid[l], cc.corner[c], fa, k, g);
            }
          }
        }
      }
    }

    // ---- normal losses ----
    if (reg != nullptr && spec.geometry_params &&
        (spec.term1 || spec.term2 || spec.term3 || spec.smooth)) {
      const Vec3 resid = sc.density_normal - sc.pred_normal;  // n - n'
      const Vec3 resid_s = sc.pred_normal_p - sc.pred_normal;
      // Term 1 and the smoothness weight flow only into omega.
      if (spec.term1)
        d_omega[i] += spec.loss_scale * reg->lambda1 * length_squared(resid);
      if (spec.smooth)
        d_omega[i] += spec.loss_scale * reg->lambda4 * length_squared(resid_s);

      // Term 2: gradient into the density normal only.
      const Vec3 d_n = spec.term2 ? resid * (2.f * reg->lambda2 * sc.weight * spec.loss_scale)
                                  : Vec3{};
      // Term 3 + smoothness: gradient into the predicted normals only.
      Vec3 d_np = spec.term3 ? resid * (-2.f * reg->lambda3 * sc.weight * spec.loss_scale)
                             : Vec3{};
      if (spec.smooth) d_np += resid_s * (-2.f * reg->lambda4 * sc.weight * spec.loss_scale);
      const Vec3 d_npp =
          spec.smooth ? resid_s * (2.f * reg->lambda4 * sc.weight * spec.loss_scale) : Vec3{};

      // Density normal n = -normalize(grad_u).
      const float glen = length(sc.grad_u);
      if (spec.term2 && glen > 1e-8f) {
        const Vec3 d_m = normalize_backward(-sc.grad_u, sc.density_normal, d_n);
        const Vec3 d_grad = -d_m;
        const float* w = vals + layout.density_w;
        for (int l = 0; l < kLevels; ++l) {
          const CornerCache& cc = sc.cells[l];
          for (int k = 0; k < fd; ++k) {
            // d u / d grid value via the weight gradient; d u / d w via the
            // feature gradient.
            Vec3 gk{};
            for (int c = 0; c < 8; ++c) {
              const float v =
                  vals[layout.density_grid[l] + static_cast<size_t>(cc.corner[c]) * fd + k];
              gk += Vec3{cc.dwdx[c], cc.dwdy[c], cc.dwdz[c]} * v;
            }
            dense(layout.density_w + l * fd + k) += dot(d_grad, gk);
            const float wk = w[l * fd + k];
            for (int c = 0; c < 8; ++c) {
              const float g =
                  wk * (d_grad.x * cc.dwdx[c] + d_grad.y * cc.dwdy[c] + d_grad.z * cc.dwdz[c]);
              if (g != 0.f) push_grid(layout.density_grid[l], cc.corner[c], fd, k, g);
            }
          }
        }
      }

      // Predicted normals: back through normalize + MLP at x and x + eps.
      auto normal_mlp_backward = [&](const float fd_feats[], const std::vector<float>& hidden,
                                     const Vec3& raw, const Vec3& unit, const Vec3& d_unit,
                                     const CornerCache cells[]) {
        const Vec3 d_raw3 = normalize_backward(raw, unit, d_unit);
        float d_raw[3] = {d_raw3.x, d_raw3.y, d_raw3.z};
        float d_hidden[32] = {};
        affine_backward(vals + layout.normal_w2, hidden.data(), d_raw, nh, 3,
                        &dense(layout.normal_w2), &dense(layout.normal_b2), d_hidden);
        for (int i2 = 0; i2 < nh; ++i2)
          if (hidden[i2] <= 0.f) d_hidden[i2] = 0.f;
        float packed[2 * kMaxFeatures];
        for (int l = 0; l < kLevels; ++l)
          for (int k = 0; k < fd; ++k) packed[l * fd + k] = fd_feats[l * kMaxFeatures + k];
        float d_packed[2 * kMaxFeatures] = {};
        affine_backward(vals + layout.normal_w1, packed, d_hidden, 2 * fd, nh,
                        &dense(layout.normal_w1), &dense(layout.normal_b1), d_packed);
        for (int l = 0; l < kLevels; ++l) {
          const CornerCache& cc = cells[l];
          for (int c = 0; c < 8; ++c) {
            const float w = cc.weight[c];
            if (w == 0.f) continue;
            for (int k = 0; k < fd; ++k) {
              const float g = d_packed[l * fd + k] * w;
              if (g != 0.f) push_grid(layout.density_grid[l], cc.corner[c], fd, k, g);
            }
          }
        }
      };
      normal_mlp_backward(sc.fd, sc.nh, sc.pred_raw, sc.pred_normal, d_np, sc.cells);
      if (!sc.nh_p.empty())
        normal_mlp_backward(sc.fd_p, sc.nh_p, sc.pred_raw_p, sc.pred_normal_p, d_npp, sc.cells_p);
    }
  }

  // ---- sigma backward over the transmittance chain ----
  if (spec.geometry_params) {
    float suffix = 0.f;  // sum_{j>i} d_omega_j * omega_j
    for (int i = m - 1; i >= 0; --i) {
      const SampleCache& sc = fwd.samples[i];
      const float t_next = sc.transmittance * (1.f - sc.alpha);
      const float d_sigma = sc.delta * (t_next * d_omega[i] - suffix);
      suffix += d_omega[i] * sc.weight;
      if (d_sigma == 0.f) continue;
      const float d_u = d_sigma * cfg.density_scale * sigmoid(sc.u);
      dense(layout.density_b) += d_u;
      for (int l = 0; l < kLevels; ++l) {
        const CornerCache& cc = sc.cells[l];
        for (int k = 0; k < fd; ++k) {
          dense(layout.density_w + l * fd + k) += d_u * sc.fd[l * kMaxFeatures + k];
          const float wk = vals[layout.density_w + l * fd + k];
          const float gk = d_u * wk;
          for (int c = 0; c < 8; ++c) {
            const float g = gk * cc.weight[c];
            if (g != 0.f) push_grid(layout.density_grid[l], cc.corner[c], fd, k, g);
          }
        }
      }
    }
  }

  // ---- modulation head + latent code ----
  if (modulated) {
    const int mh = latents->hidden(), d = latents->dim();
    std::span<const float> z = latents->code(latent_row);
    std::vector<float> d_hidden(mh, 0.f);
    for (int o = 0; o < 2 * bn; ++o) {
      const float g = d_mod_out[o];
      if (g == 0.f) continue;
      const float* row = latents->mod_w2().data() + static_cast<size_t>(o) * mh;
      float* drow = sink.mod_w2.data() + static_cast<size_t>(o) * mh;
      for (int i2 = 0; i2 < mh; ++i2) {
        drow[i2] += g * fwd.mod_hidden[i2];
        d_hidden[i2] += g * row[i2];
      }
    }
    for (int i2 = 0; i2 < mh; ++i2) {
      const float th = fwd.mod_hidden[i2];
      const float g = d_hidden[i2] * (1.f - th * th);
      if (g == 0.f) continue;
      const float* row = latents->mod_w1().data() + static_cast<size_t>(i2) * d;
      float* drow = sink.mod_w1.data() + static_cast<size_t>(i2) * d;
      for (int k = 0; k < d; ++k) {
        drow[k] += g * z[k];
        sink.latent[k] += g * row[k];
      }
    }
  }
}

}  // namespace relight::field::internal

// ---------------------------------------------------------------------------
// Public rendering entry points.
// ---------------------------------------------------------------------------

namespace relight::field {

RayResult render_ray(const RadianceFieldParams& params, const LatentTable* latents,
                     int latent_row, const Ray& ray, int64_t ray_id, const RenderContext& ctx) {
  using namespace internal;
  if (!params.all_finite())
    throw std::invalid_argument("render_ray: non-finite field parameters");
  const ParamLayout layout = ParamLayout::resolve(params);

  ForwardOptions opt;
  opt.seed = ctx.seed;
  opt.step = ctx.step;
  opt.jitter = ctx.jitter;
  opt.compute_normals = ctx.compute_normals;
  opt.sigma_perturb = ctx.sigma_perturb;
  opt.weight_cutoff = params.config().appearance_weight_cutoff;
  opt.max_live = params.config().appearance_max_live;
  opt.frozen_fine_ts = ctx.frozen_fine_ts;

  RayForward fwd;
  forward_ray(params, layout, latents, latent_row, ray, ray_id, opt, fwd);

  RayResult result;
  result.color = fwd.color;
  result.weight_sum = fwd.weight_sum;
  if (ctx.want_records) {
    result.samples.reserve(fwd.samples.size());
    for (const auto& sc : fwd.samples) {
      RaySample s;
      s.t = sc.t;
      s.delta = sc.delta;
      s.position = sc.position;
      s.sigma = sc.sigma;
      s.alpha = sc.alpha;
      s.weight = sc.weight;
      s.density_normal = sc.density_normal;
      s.pred_normal = sc.pred_normal;
      s.pred_normal_perturbed = sc.pred_normal_p;
      s.color = sc.color;
      s.appearance_live = sc.live;
      result.samples.push_back(s);
    }
  }
  return result;
}

ImageBuffer render_image(const RadianceFieldParams& params, const LatentTable* latents,
                         int latent_row, const Camera& camera, uint64_t seed) {
  ImageBuffer img(camera.width, camera.height, 3, Colorspace::kLinear);
  const internal::ParamLayout layout = internal::ParamLayout::resolve(params);
  internal::ForwardOptions opt;
  opt.seed = seed;
  opt.jitter = false;
  opt.weight_cutoff = params.config().appearance_weight_cutoff;
  opt.max_live = params.config().appearance_max_live;

  parallel_for_each(0, camera.height, [&](int64_t y) {
    internal::RayForward fwd;
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = camera.ray_through(x + 0.5f, static_cast<float>(y) + 0.5f);
      internal::forward_ray(params, layout, latents, latent_row, ray,
                            y * camera.width + x, opt, fwd);
      img.set_rgb(x, static_cast<int>(y), fwd.color);
    }
  });
  return img;
}

}  // namespace relight::field
