// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/path_tracer.h"

#include "relight/parallel.h"
#include "relight/rng.h"

namespace relight {

namespace {

constexpr float kRayEpsilon = 1e-4f;
// Secondary rays start offset along the face normal; grazing hit points
// carry enough float error to fall below the surface plane otherwise.
constexpr float kOriginOffset = 1e-4f;

inline float mis_weight(float pdf_a, float pdf_b) {
  // Balance heuristic.
  return pdf_a / (pdf_a + pdf_b);
}

struct StratGrid {
  int nx = 1, ny = 1;
};

StratGrid strat_grid(int spp) {
  int nx = static_cast<int>(std::sqrt(static_cast<float>(spp)));
  while (nx > 1 && spp % nx != 0) --nx;
  return {nx, spp / nx};
}

// Light samples averaged at the first bounce; shadow rays are cheap
// relative to full path segments and carry most of the estimator variance.
constexpr int kNeeSamplesB0 = 4;

struct Bounce0Strata {
  int nee_cell[kNeeSamplesB0] = {};
  int bsdf_cell = 0;
};

Vec3 trace_path(const Scene& scene, const EnvironmentMap& envmap, const LightSampler* light,
                Ray ray, const RenderOptions& opt, Pcg32& rng, const Bounce0Strata& strata,
                const StratGrid& grid) {
  Vec3 radiance{};
  Vec3 throughput{1.f, 1.f, 1.f};
  float bsdf_pdf_prev = 0.f;

  for (int bounce = 0; bounce <= opt.max_bounces; ++bounce) {
    const std::optional<Hit> hit =
        scene.empty() ? std::optional<Hit>{} : scene.bvh().intersect(ray, kRayEpsilon);
    if (!hit) {
      if (bounce == 0) {
        // The camera sees the environment only under that background policy.
        if (scene.background == Background::kEnvironment)
          radiance += throughput * envmap.lookup(ray.dir);
      } else {
        // Escaped BSDF ray: MIS-weight against the light-sampling strategy.
        const float w = light ? mis_weight(bsdf_pdf_prev, light->pdf(ray.dir)) : 1.f;
        radiance += throughput * envmap.lookup(ray.dir) * w;
      }
      break;
    }

    const GgxMaterial& mat = scene.material_of_triangle(hit->triangle);
    Vec3 n = opt.normals == NormalSource::kFace
                 ? hit->face_normal
                 : (opt.normals == NormalSource::kSmoothed ? hit->smoothed_normal
                                                           : hit->geometric_normal);
    const Vec3 view = -ray.dir;
    // Interpolated normals can fold away from the view at silhouettes; the
    // true face normal always faces the ray and keeps the estimator
    // energy-conserving there.
    if (dot(n, view) <= 0.f) n = hit->face_normal;

    // Next-event estimation toward the environment.
    if (light) {
      const int nee_count = bounce == 0 ? kNeeSamplesB0 : 1;
      for (int j = 0; j < nee_count; ++j) {
        float u1, u2;
        if (bounce == 0) {
          // Stratified over an spp*kNeeSamplesB0 grid, shuffled per pixel.
          const int cell = strata.nee_cell[j];
          const int cx = cell % grid.nx, cy = cell / grid.nx;
          u1 = (cx + rng.next_float()) / grid.nx;
          u2 = (cy + rng.next_float()) / (grid.ny * kNeeSamplesB0);
        } else {
          u1 = rng.next_float();
          u2 = rng.next_float();
        }
        const LightSample ls = light->sample(u1, u2);
        const float n_dot_l = dot(n, ls.dir);
        if (ls.pdf > 0.f && n_dot_l > 0.f) {
          const Vec3 f = eval_brdf(mat, n, view, ls.dir);
          if (max_component(f) > 0.f &&
              !scene.bvh().occluded({hit->position + hit->face_normal * kOriginOffset, ls.dir},
                                    kRayEpsilon, kInfinity)) {
            const float w = mis_weight(ls.pdf, brdf_pdf(mat, n, view, ls.dir));
            radiance +=
                throughput * f * ls.radiance * (n_dot_l * w / (ls.pdf * nee_count));
          }
        }
      }
    }

    if (bounce == opt.max_bounces) break;

    // Continue the path by BSDF sampling.
    const float u_lobe = rng.next_float();
    float u1, u2;
    if (bounce == 0) {
      const int cx = strata.bsdf_cell % grid.nx, cy = strata.bsdf_cell / grid.nx;
      u1 = (cx + rng.next_float()) / grid.nx;
      u2 = (cy + rng.next_float()) / grid.ny;
    } else {
      u1 = rng.next_float();
      u2 = rng.next_float();
    }
    const BsdfSample bs = sample_brdf(mat, n, view, u_lobe, u1, u2);
    if (bs.pdf <= 0.f) break;
    const Vec3 f = eval_brdf(mat, n, view, bs.incident);
    throughput = throughput * f * (dot(n, bs.incident) / bs.pdf);
    if (max_component(throughput) <= 0.f) break;

    if (opt.russian_roulette && bounce >= 3) {
      const float survive = clamp(max_component(throughput), 0.05f, 0.95f);
      if (rng.next_float() >= survive) break;
      throughput = throughput / survive;
    }

    bsdf_pdf_prev = bs.pdf;
    ray = {hit->position + hit->face_normal * kOriginOffset, bs.incident};
  }
  return radiance;
}

}  // namespace

ImageBuffer path_trace(const Scene& scene, const EnvironmentMap& envmap, const Camera& camera,
                       const RenderOptions& opt, RenderStats* stats) {
  if (scene.empty() && scene.background == Background::kBlack)
    throw std::invalid_argument("path_trace: empty scene with black background");
  if (!scene.empty() && !scene.committed())
    throw std::logic_error("path_trace: scene not committed");

  // Light sampler is shared read-only; all-black maps only allow pure
  // background renders.
  std::unique_ptr<LightSampler> light;
  if (envmap.total_flux() > 0.f) light = std::make_unique<LightSampler>(envmap);

  ImageBuffer image(camera.width, camera.height, 3, Colorspace::kLinear);
  const StratGrid grid = strat_grid(opt.spp);
  const int w = camera.width;

  parallel_for_each(0, static_cast<int64_t>(w) * camera.height, [&](int64_t pixel) {
    const int px = static_cast<int>(pixel % w);
    const int py = static_cast<int>(pixel / w);
    Pcg32 rng = make_stream(opt.seed, 0x70617468ull, static_cast<uint64_t>(pixel));
    // Independent shuffles per stratified dimension keep subpixel position,
    // light strata, and BSDF strata uncorrelated while each stays jittered.
    const uint32_t perm_seed = static_cast<uint32_t>(hash_combine(opt.seed, pixel));

    double acc[3] = {0.0, 0.0, 0.0};
    int64_t bad = 0;
    for (int s = 0; s < opt.spp; ++s) {
      // Stratified subpixel jitter.
      const int cx = s % grid.nx, cy = s / grid.nx;
      const float jx = (cx + rng.next_float()) / grid.nx;
      const float jy = (cy + rng.next_float()) / grid.ny;
      const Ray ray = camera.ray_through(px + jx, py + jy);
      Bounce0Strata strata;
      for (int j = 0; j < kNeeSamplesB0; ++j)
        strata.nee_cell[j] = static_cast<int>(permutation_element(
            s * kNeeSamplesB0 + j, opt.spp * kNeeSamplesB0, perm_seed ^ 0x51a7be3du));
      strata.bsdf_cell =
          static_cast<int>(permutation_element(s, opt.spp, perm_seed ^ 0x0b5df00du));
      Vec3 sample = trace_path(scene, envmap, light.get(), ray, opt, rng, strata, grid);
      if (!is_finite(sample)) {
        sample = Vec3{};
        ++bad;
      }
      acc[0] += sample.x;
      acc[1] += sample.y;
      acc[2] += sample.z;
    }
    image.set_rgb(px, py,
                  Vec3{static_cast<float>(acc[0] / opt.spp), static_cast<float>(acc[1] / opt.spp),
                       static_cast<float>(acc[2] / opt.spp)});
    if (bad && stats) stats->non_finite_samples.fetch_add(bad, std::memory_order_relaxed);
  });
  return image;
}

}  // namespace relight
