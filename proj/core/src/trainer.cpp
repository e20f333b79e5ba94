// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/field/trainer.h"

#include <cstring>
#include <stdexcept>

#include "field_internal.h"
#include "relight/parallel.h"

namespace relight::field {

using namespace internal;

namespace {

constexpr int kWindow = 128;  // rays folded per deterministic window

// Adam state over one flat value block. Grid entries update lazily (moments
// touched only for parameters that received gradient this step, the usual
// sparse-Adam semantics); everything else updates densely.
struct AdamState {
  std::vector<float> m, v;
  void init(size_t n) {
    m.assign(n, 0.f);
    v.assign(n, 0.f);
  }
  void update(float* p, const float* g, size_t i, float lr, const OptimizerConfig& opt,
              float bias1, float bias2) {
    m[i] = opt.beta1 * m[i] + (1.f - opt.beta1) * g[i];
    v[i] = opt.beta2 * v[i] + (1.f - opt.beta2) * g[i] * g[i];
    const float mh = m[i] / bias1;
    const float vh = v[i] / bias2;
    p[i] -= lr * mh / (std::sqrt(vh) + opt.eps);
  }
};

struct RayTask {
  Ray ray;
  Vec3 target;
  int64_t ray_id = 0;
  int latent_row = -1;
  const CachedRay* cached = nullptr;
};

// One deterministic optimization step over a ray batch. Forward/backward
// parallelizes over rays inside fixed windows; gradients fold serially in
// ray order, so results do not depend on the worker count.
struct StepContext {
  RadianceFieldParams* params;
  LatentTable* latents = nullptr;  // optimized during distillation
  const RegularizerConfig* reg = nullptr;
  bool geometry_params = true;
  bool appearance_params = true;
  float weight_cutoff = 0.f;
  int max_live = 0;
  float sigma_perturb = 0.f;
  uint64_t seed = 0;

  // Accumulators sized on first use.
  std::vector<float> grad_grid;        // [0, grid_region_end)
  std::vector<uint64_t> touched_mask;  // bitmask over grid entries
  std::vector<float> grad_dense;       // [grid_region_end, total)
  std::vector<float> grad_latents, grad_mod_w1, grad_mod_w2;
  std::vector<uint8_t> latent_row_touched;
  std::vector<uint8_t> dense_is_geometry;  // per dense index, resolved once
  AdamState adam_grid, adam_dense, adam_latents, adam_mod_w1, adam_mod_w2;

  std::vector<RayForward> fwd_pool{kWindow};
  std::vector<GradSink> sink_pool{kWindow};
};

LossBreakdown run_step(StepContext& ctx, const ParamLayout& layout,
                       std::span<const RayTask> batch, int64_t step, const OptimizerConfig& opt,
                       bool apply_update) {
  RadianceFieldParams& params = *ctx.params;
  const size_t grid_end = layout.grid_region_end;
  const size_t dense_n = params.values().size() - grid_end;
  const int latent_dim = ctx.latents ? ctx.latents->dim() : 0;
  const size_t mod1_n = ctx.latents ? ctx.latents->mod_w1().size() : 0;
  const size_t mod2_n = ctx.latents ? ctx.latents->mod_w2().size() : 0;

  if (ctx.grad_grid.size() != grid_end) {
    ctx.grad_grid.assign(grid_end, 0.f);
    ctx.touched_mask.assign((grid_end + 63) / 64, 0);
    ctx.adam_grid.init(grid_end);
    ctx.grad_dense.assign(dense_n, 0.f);
    ctx.adam_dense.init(dense_n);
    ctx.dense_is_geometry.resize(dense_n);
    for (size_t i = 0; i < dense_n; ++i)
      ctx.dense_is_geometry[i] = params.is_geometry_param(grid_end + i) ? 1 : 0;
    if (ctx.latents) {
      ctx.grad_latents.assign(ctx.latents->codes().size(), 0.f);
      ctx.latent_row_touched.assign(ctx.latents->rows(), 0);
      ctx.adam_latents.init(ctx.latents->codes().size());
      ctx.grad_mod_w1.assign(mod1_n, 0.f);
      ctx.grad_mod_w2.assign(mod2_n, 0.f);
      ctx.adam_mod_w1.init(mod1_n);
      ctx.adam_mod_w2.init(mod2_n);
    }
  } else {
    std::fill(ctx.grad_dense.begin(), ctx.grad_dense.end(), 0.f);
    for (uint64_t& w : ctx.touched_mask) w = 0;
    // grad_grid is cleared per touched entry after the previous update.
    if (ctx.latents) {
      std::fill(ctx.grad_mod_w1.begin(), ctx.grad_mod_w1.end(), 0.f);
      std::fill(ctx.grad_mod_w2.begin(), ctx.grad_mod_w2.end(), 0.f);
      std::fill(ctx.latent_row_touched.begin(), ctx.latent_row_touched.end(), 0);
    }
  }

  const int n = static_cast<int>(batch.size());
  const float inv_batch = 1.f / n;
  LossBreakdown loss;

  for (int window = 0; window < n; window += kWindow) {
    const int count = std::min(kWindow, n - window);

    parallel_for_each(0, count, [&](int64_t j) {
      const RayTask& task = batch[window + j];
      ForwardOptions fopt;
      fopt.seed = ctx.seed;
      fopt.step = step;
      fopt.jitter = true;
      fopt.compute_normals = ctx.reg != nullptr;
      fopt.sigma_perturb = ctx.reg ? ctx.reg->sigma : 0.f;
      fopt.weight_cutoff = ctx.weight_cutoff;
      fopt.max_live = ctx.max_live;
      fopt.cached = task.cached;

      RayForward& fwd = ctx.fwd_pool[j];
      forward_ray(params, layout, ctx.latents, task.latent_row, task.ray, task.ray_id, fopt,
                  fwd);

      GradSink& sink = ctx.sink_pool[j];
      sink.clear(dense_n, latent_dim, mod1_n, mod2_n);
      if (!fwd.valid) return;

      BackwardLossSpec spec;
      spec.d_color = (fwd.color - task.target) * (2.f * inv_batch);
      spec.reg = ctx.reg;
      spec.recon = true;
      spec.term1 = spec.term2 = spec.term3 = spec.smooth = ctx.reg != nullptr;
      spec.geometry_params = ctx.geometry_params;
      spec.appearance_params = ctx.appearance_params;
      spec.loss_scale = inv_batch;
      backward_ray(params, layout, ctx.latents, task.latent_row, task.ray, fwd, spec, sink);
    });

    // Serial fold in ray order.
    for (int j = 0; j < count; ++j) {
      const RayTask& task = batch[window + j];
      const RayForward& fwd = ctx.fwd_pool[j];
      if (fwd.valid) {
        loss.recon += inv_batch * length_squared(fwd.color - task.target);
        if (ctx.reg) {
          const NormalLossValues nv = normal_loss_values(fwd, *ctx.reg);
          loss.lp += inv_batch * nv.lp;
          loss.ls += inv_batch * nv.ls;
        }
      }
      GradSink& sink = ctx.sink_pool[j];
      for (const auto& [idx, g] : sink.grid) {
        ctx.grad_grid[idx] += g;
        ctx.touched_mask[idx >> 6] |= 1ull << (idx & 63);
      }
      for (size_t i = 0; i < dense_n; ++i) ctx.grad_dense[i] += sink.dense[i];
      if (ctx.latents && task.latent_row >= 0 && latent_dim > 0) {
        float* row = ctx.grad_latents.data() + static_cast<size_t>(task.latent_row) * latent_dim;
        for (int k = 0; k < latent_dim; ++k) row[k] += sink.latent[k];
        ctx.latent_row_touched[task.latent_row] = 1;
        for (size_t i = 0; i < mod1_n; ++i) ctx.grad_mod_w1[i] += sink.mod_w1[i];
        for (size_t i = 0; i < mod2_n; ++i) ctx.grad_mod_w2[i] += sink.mod_w2[i];
      }
    }
  }

  if (!apply_update) return loss;

  const float lr = opt.learning_rate(static_cast<int>(step));
  const float bias1 = 1.f - std::pow(opt.beta1, static_cast<float>(step + 1));
  const float bias2 = 1.f - std::pow(opt.beta2, static_cast<float>(step + 1));
  float* p = params.values().data();

  // Sparse grid update via the touched bitmask; moments of untouched
  // entries stay put.
  if (ctx.geometry_params || ctx.appearance_params) {
    for (size_t w = 0; w < ctx.touched_mask.size(); ++w) {
      uint64_t bits = ctx.touched_mask[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        bits &= bits - 1;
        const size_t idx = w * 64 + b;
        ctx.adam_grid.update(p, ctx.grad_grid.data(), idx, lr * opt.grid_lr_multiplier, opt,
                             bias1, bias2);
        ctx.grad_grid[idx] = 0.f;
      }
    }
  }
  for (size_t i = 0; i < dense_n; ++i) {
    const bool geo = ctx.dense_is_geometry[i] != 0;
    if (geo && !ctx.geometry_params) continue;
    if (!geo && !ctx.appearance_params) continue;
    ctx.adam_dense.update(p + grid_end, ctx.grad_dense.data(), i, lr, opt, bias1, bias2);
  }
  if (ctx.latents && latent_dim > 0) {
    for (int r = 0; r < ctx.latents->rows(); ++r) {
      if (!ctx.latent_row_touched[r]) continue;
      for (int k = 0; k < latent_dim; ++k) {
        const size_t i = static_cast<size_t>(r) * latent_dim + k;
        ctx.adam_latents.update(ctx.latents->codes().data(), ctx.grad_latents.data(), i, lr, opt,
                                bias1, bias2);
        ctx.grad_latents[i] = 0.f;
      }
    }
    for (size_t i = 0; i < mod1_n; ++i)
      ctx.adam_mod_w1.update(ctx.latents->mod_w1().data(), ctx.grad_mod_w1.data(), i, lr, opt,
                             bias1, bias2);
    for (size_t i = 0; i < mod2_n; ++i)
      ctx.adam_mod_w2.update(ctx.latents->mod_w2().data(), ctx.grad_mod_w2.data(), i, lr, opt,
                             bias1, bias2);
  }
  return loss;
}

}  // namespace

RadianceFieldParams fit_geometry(const std::vector<TrainView>& views, const FieldConfig& config,
                                 const OptimizerConfig& opt, const RegularizerConfig& reg,
                                 TrainStats* stats) {
  if (views.empty()) throw std::invalid_argument("fit_geometry: no training views");
  RadianceFieldParams params(config, opt.seed + 1);
  const ParamLayout layout = ParamLayout::resolve(params);

  StepContext ctx;
  ctx.params = &params;
  ctx.reg = &reg;
  ctx.weight_cutoff = config.appearance_weight_cutoff;
  ctx.max_live = config.appearance_max_live;
  ctx.seed = opt.seed;

  std::vector<RayTask> batch(opt.ray_batch);
  for (int step = 0; step < opt.steps; ++step) {
    Pcg32 rng = make_stream(opt.seed, 0xba7c4ull, static_cast<uint64_t>(step));
    for (RayTask& task : batch) {
      const int view = static_cast<int>(rng.next_u32(static_cast<uint32_t>(views.size())));
      const TrainView& tv = views[view];
      const int px = static_cast<int>(rng.next_u32(static_cast<uint32_t>(tv.camera.width)));
      const int py = static_cast<int>(rng.next_u32(static_cast<uint32_t>(tv.camera.height)));
      task.ray = tv.camera.ray_through(px + 0.5f, py + 0.5f);
      task.target = tv.image.rgb(px, py);
      task.ray_id = (static_cast<int64_t>(view) << 32) |
                    (static_cast<int64_t>(py) * tv.camera.width + px);
      task.latent_row = -1;
      task.cached = nullptr;
    }
    const LossBreakdown loss = run_step(ctx, layout, batch, step, opt, true);
    if (!std::isfinite(loss.total()))
      throw std::runtime_error("fit_geometry: loss diverged at step " + std::to_string(step));
    if (stats && (step % stats->log_every == 0 || step == opt.steps - 1)) {
      stats->loss_curve.push_back(static_cast<float>(loss.total()));
      if (stats->on_log) stats->on_log(step, static_cast<float>(loss.total()));
    }
  }
  return params;
}

DistillResult distill(const RelitSampleSet& samples, const std::vector<Camera>& cameras,
                      const RadianceFieldParams& geometry, const OptimizerConfig& opt,
                      int latent_dim_override, TrainStats* stats) {
  if (!samples.complete()) throw std::invalid_argument("distill: incomplete sample set");
  if (static_cast<int>(cameras.size()) != samples.num_views())
    throw std::invalid_argument("distill: camera count does not match the sample set");
  const ImageBuffer& first = samples.image(0, 0);
  for (const Camera& cam : cameras)
    if (cam.width != first.width() || cam.height != first.height())
      throw std::invalid_argument("distill: sample resolution does not match the cameras");

  DistillResult result;
  result.params = geometry;
  const FieldConfig& cfg = result.params.config();
  const ParamLayout layout = ParamLayout::resolve(result.params);

  const int latent_dim = latent_dim_override >= 0 ? latent_dim_override : cfg.latent_dim;
  const int rows = samples.num_views() * samples.samples_per_view();
  result.latents =
      LatentTable(rows, latent_dim, cfg.bottleneck_width, cfg.mod_hidden, opt.seed + 2);

  // Bake the frozen-geometry ray caches: per view, per pixel, the live fine
  // samples and their volume-rendering weights.
  const int width = first.width(), height = first.height();
  std::vector<std::vector<CachedRay>> cache(cameras.size());
  for (size_t v = 0; v < cameras.size(); ++v) {
    cache[v].resize(static_cast<size_t>(width) * height);
    parallel_for_each(0, static_cast<int64_t>(width) * height, [&](int64_t pix) {
      ForwardOptions fopt;
      fopt.seed = opt.seed;
      fopt.step = -1;
      fopt.jitter = false;
      fopt.want_appearance = false;
      RayForward fwd;
      const int px = static_cast<int>(pix % width), py = static_cast<int>(pix / width);
      const Ray ray = cameras[v].ray_through(px + 0.5f, py + 0.5f);
      forward_ray(geometry, layout, nullptr, -1, ray, pix, fopt, fwd);
      CachedRay& cr = cache[v][pix];
      if (!fwd.valid) {
        cr.bg_weight = 1.f;
        return;
      }
      cr.bg_weight = fwd.bg_weight;
      std::vector<std::pair<float, int>> order;
      for (int si = 0; si < static_cast<int>(fwd.samples.size()); ++si)
        if (fwd.samples[si].weight > cfg.appearance_weight_cutoff)
          order.push_back({fwd.samples[si].weight, si});
      if (cfg.appearance_max_live > 0 &&
          static_cast<int>(order.size()) > cfg.appearance_max_live) {
        std::sort(order.begin(), order.end(), std::greater<>());
        order.resize(cfg.appearance_max_live);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
      }
      for (const auto& [w, si] : order) {
        cr.ts.push_back(fwd.samples[si].t);
        cr.weights.push_back(w);
      }
    });
  }

  StepContext ctx;
  ctx.params = &result.params;
  ctx.latents = &result.latents;
  ctx.reg = nullptr;              // reconstruction only
  ctx.geometry_params = false;    // density grid bits stay identical
  ctx.weight_cutoff = cfg.appearance_weight_cutoff;
  ctx.seed = opt.seed;

  const int s_count = samples.samples_per_view();
  std::vector<RayTask> batch(opt.ray_batch);
  for (int step = 0; step < opt.steps; ++step) {
    Pcg32 rng = make_stream(opt.seed, 0xd15717ull, static_cast<uint64_t>(step));
    for (RayTask& task : batch) {
      const int view = static_cast<int>(rng.next_u32(static_cast<uint32_t>(cameras.size())));
      const int s = static_cast<int>(rng.next_u32(static_cast<uint32_t>(s_count)));
      const int px = static_cast<int>(rng.next_u32(static_cast<uint32_t>(width)));
      const int py = static_cast<int>(rng.next_u32(static_cast<uint32_t>(height)));
      task.ray = cameras[view].ray_through(px + 0.5f, py + 0.5f);
      task.target = samples.image(view, s).rgb(px, py);
      task.ray_id = (static_cast<int64_t>(view) << 40) | (static_cast<int64_t>(s) << 32) |
                    (static_cast<int64_t>(py) * width + px);
      task.latent_row = latent_dim > 0 ? samples.row_of(view, s) : -1;
      task.cached = &cache[view][static_cast<size_t>(py) * width + px];
    }
    const LossBreakdown loss = run_step(ctx, layout, batch, step, opt, true);
    if (!std::isfinite(loss.total()))
      throw std::runtime_error("distill: loss diverged at step " + std::to_string(step));
    if (stats && (step % stats->log_every == 0 || step == opt.steps - 1)) {
      stats->loss_curve.push_back(static_cast<float>(loss.total()));
      if (stats->on_log) stats->on_log(step, static_cast<float>(loss.total()));
    }
  }
  return result;
}

ImageBuffer render_novel(const RadianceFieldParams& params, const LatentTable* latents,
                         const Camera& camera, int latent_row) {
  return render_image(params, latents, latent_row, camera);
}

ScalarGrid bake_density_grid(const RadianceFieldParams& params, std::array<int, 3> resolution) {
  const ParamLayout layout = ParamLayout::resolve(params);
  ScalarGrid grid(resolution, params.config().bounds);
  const FieldConfig& cfg = params.config();
  const float* vals = params.values().data();
  parallel_for_each(0, resolution[2], [&](int64_t z) {
    SampleCache sc;
    for (int y = 0; y < resolution[1]; ++y)
      for (int x = 0; x < resolution[0]; ++x) {
        sc.position = grid.node_position(x, y, static_cast<int>(z));
        for (int l = 0; l < kLevels; ++l) {
          make_corner_cache(cfg.bounds, layout.grid_res[l], sc.position, sc.cells[l]);
          gather_features(vals, layout.density_grid[l], sc.cells[l], cfg.density_features,
                          sc.fd + l * kMaxFeatures);
        }
        const float u = density_u(params, layout, sc, false);
        grid.at(x, y, static_cast<int>(z)) =
            cfg.density_scale * (u > 20.f ? u : std::log1p(std::exp(u)));
      }
  });
  return grid;
}

// ---------------------------------------------------------------------------
// Loss-term surface for gradient checks.
// ---------------------------------------------------------------------------

namespace {

struct TermForward {
  RayForward live, frozen;
};

void term_forward(const RadianceFieldParams& live, const RadianceFieldParams& frozen,
                  const CheckBatch& batch, int ray_index, const RegularizerConfig& reg,
                  TermForward& out) {
  const ParamLayout layout_live = ParamLayout::resolve(live);
  const ParamLayout layout_frozen = ParamLayout::resolve(frozen);

  // Base pass at the frozen parameters decides the fine-sample positions.
  ForwardOptions base;
  base.seed = batch.seed;
  base.step = batch.step;
  base.jitter = true;
  base.compute_normals = true;
  base.sigma_perturb = reg.sigma;
  base.weight_cutoff = 0.f;
  forward_ray(frozen, layout_frozen, nullptr, -1, batch.rays[ray_index], ray_index, base,
              out.frozen);

  ForwardOptions fo = base;
  fo.frozen_fine_ts = &out.frozen.fine_ts;
  forward_ray(live, layout_live, nullptr, -1, batch.rays[ray_index], ray_index, fo, out.live);
}

}  // namespace

double loss_term_value(const RadianceFieldParams& live, const RadianceFieldParams& frozen,
                       const CheckBatch& batch, LossTerm term, const RegularizerConfig& reg) {
  double total = 0.0;
  const double inv_batch = 1.0 / batch.rays.size();
  TermForward tf;
  for (size_t r = 0; r < batch.rays.size(); ++r) {
    term_forward(live, frozen, batch, static_cast<int>(r), reg, tf);
    if (!tf.live.valid) continue;
    const size_t m = tf.live.samples.size();

    if (term == LossTerm::kReconstruction || term == LossTerm::kAll)
      total += inv_batch * length_squared(tf.live.color - batch.targets[r]);

    for (size_t i = 0; i < m; ++i) {
      const SampleCache& sl = tf.live.samples[i];
      const SampleCache& sf = tf.frozen.samples[i];
      if (!sl.live) continue;
      switch (term) {
        case LossTerm::kNormalTerm1:
          total += inv_batch * reg.lambda1 * sl.weight *
                   length_squared(sf.density_normal - sf.pred_normal);
          break;
        case LossTerm::kNormalTerm2:
          total += inv_batch * reg.lambda2 * sf.weight *
                   length_squared(sl.density_normal - sf.pred_normal);
          break;
        case LossTerm::kNormalTerm3:
          total += inv_batch * reg.lambda3 * sf.weight *
                   length_squared(sf.density_normal - sl.pred_normal);
          break;
        case LossTerm::kSmoothness:
          total += inv_batch * reg.lambda4 * sl.weight *
                   length_squared(sl.pred_normal_p - sl.pred_normal);
          break;
        case LossTerm::kAll: {
          const Vec3 resid = sl.density_normal - sl.pred_normal;
          total += inv_batch * (reg.lambda1 + reg.lambda2 + reg.lambda3) * sl.weight *
                   length_squared(resid);
          total += inv_batch * reg.lambda4 * sl.weight *
                   length_squared(sl.pred_normal_p - sl.pred_normal);
          break;
        }
        default:
          break;
      }
    }
  }
  return total;
}

std::vector<float> loss_term_gradient(const RadianceFieldParams& params, const CheckBatch& batch,
                                      LossTerm term, const RegularizerConfig& reg) {
  const ParamLayout layout = ParamLayout::resolve(params);
  std::vector<float> grad(params.values().size(), 0.f);
  const float inv_batch = 1.f / batch.rays.size();

  RayForward fwd;
  GradSink sink;
  for (size_t r = 0; r < batch.rays.size(); ++r) {
    ForwardOptions fo;
    fo.seed = batch.seed;
    fo.step = batch.step;
    fo.jitter = true;
    fo.compute_normals = true;
    fo.sigma_perturb = reg.sigma;
    fo.weight_cutoff = 0.f;
    forward_ray(params, layout, nullptr, -1, batch.rays[r], static_cast<int64_t>(r), fo, fwd);
    if (!fwd.valid) continue;

    sink.clear(params.values().size() - layout.grid_region_end, 0, 0, 0);
    BackwardLossSpec spec;
    spec.reg = &reg;
    spec.loss_scale = inv_batch;
    spec.recon = term == LossTerm::kReconstruction || term == LossTerm::kAll;
    spec.term1 = term == LossTerm::kNormalTerm1 || term == LossTerm::kAll;
    spec.term2 = term == LossTerm::kNormalTerm2 || term == LossTerm::kAll;
    spec.term3 = term == LossTerm::kNormalTerm3 || term == LossTerm::kAll;
    spec.smooth = term == LossTerm::kSmoothness || term == LossTerm::kAll;
    spec.d_color = spec.recon ? (fwd.color - batch.targets[r]) * (2.f * inv_batch) : Vec3{};
    backward_ray(params, layout, nullptr, -1, batch.rays[r], fwd, spec, sink);

    for (const auto& [idx, g] : sink.grid) grad[idx] += g;
    for (size_t i = 0; i < sink.dense.size(); ++i) grad[layout.grid_region_end + i] += sink.dense[i];
  }
  return grad;
}

LossBreakdown normal_losses(std::span<const RaySample> records, const RegularizerConfig& reg) {
  LossBreakdown out;
  for (const RaySample& s : records) {
    const float r = length_squared(s.density_normal - s.pred_normal);
    out.lp += (reg.lambda1 + reg.lambda2 + reg.lambda3) * s.weight * r;
    out.ls += reg.lambda4 * s.weight * length_squared(s.pred_normal_perturbed - s.pred_normal);
  }
  return out;
}

}  // namespace relight::field
