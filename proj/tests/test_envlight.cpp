// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>

#include "relight/light_sampler.h"
#include "relight/rng.h"

namespace relight {
namespace {

EnvironmentMap random_map(int w, int h, uint64_t seed, float lo = 0.05f, float hi = 1.f) {
  ImageBuffer img(w, h, 3, Colorspace::kLinear);
  Pcg32 rng = make_stream(seed, 0xe2ull);
  for (float& v : img.pixels()) v = lo + (hi - lo) * rng.next_float();
  return EnvironmentMap(std::move(img));
}

TEST(EnvMap, UpAxisHitsTopRow) {
  ImageBuffer img(8, 4, 3, Colorspace::kLinear);
  for (int x = 0; x < 8; ++x) img.set_rgb(x, 0, {2.f, 2.f, 2.f});
  const EnvironmentMap map{std::move(img)};
  const Vec3 v = map.lookup({0.f, 1.f, 0.f});
  // v = 0 row; clamped bilinear returns the top row's value.
  EXPECT_NEAR(v.x, 2.f, 1e-6f);
}

TEST(EnvMap, ConstantMapLooksUpConstant) {
  const EnvironmentMap map = EnvironmentMap::constant(0.75f);
  Pcg32 rng = make_stream(1, 2);
  for (int i = 0; i < 64; ++i) {
    const float z = 1.f - 2.f * rng.next_float();
    const float phi = kTwoPi * rng.next_float();
    const float r = std::sqrt(std::max(0.f, 1.f - z * z));
    const Vec3 d{r * std::cos(phi), z, r * std::sin(phi)};
    EXPECT_NEAR(map.lookup(d).y, 0.75f, 1e-6f);
  }
}

TEST(EnvMap, TexelCenterRoundTrip) {
  const EnvironmentMap map = random_map(8, 4, 3);
  // The half-texel angular bound at this resolution.
  const float max_angle = kPi / 4.f;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      const Vec3 dir = map.texel_center_direction(x, y);
      float u, v;
      map.direction_to_uv(dir, &u, &v);
      const int bx = static_cast<int>(u * 8) % 8;
      const int by = std::min(static_cast<int>(v * 4), 3);
      EXPECT_EQ(bx, x);
      EXPECT_EQ(by, y);
      const float angle = std::acos(clamp(dot(dir, map.texel_center_direction(bx, by)), -1.f, 1.f));
      EXPECT_LE(angle, max_angle);
    }
}

TEST(EnvMap, LookupRejectsBadDirections) {
  const EnvironmentMap map = EnvironmentMap::constant(1.f);
  EXPECT_THROW(map.lookup({0.f, 0.f, 0.f}), std::invalid_argument);
  EXPECT_THROW(map.lookup({0.f, 2.f, 0.f}), std::invalid_argument);
}

TEST(EnvMap, SeamContinuity) {
  const EnvironmentMap map = random_map(32, 16, 9);
  // Directions just left/right of the u wrap seam.
  for (int y = 0; y < 16; ++y) {
    const float theta = (y + 0.5f) * kPi / 16.f;
    const Vec3 a{std::sin(theta) * std::cos(kPi - 1e-4f), std::cos(theta),
                 std::sin(theta) * std::sin(kPi - 1e-4f)};
    const Vec3 b{std::sin(theta) * std::cos(-kPi + 1e-4f), std::cos(theta),
                 std::sin(theta) * std::sin(-kPi + 1e-4f)};
    const Vec3 va = map.lookup(normalize(a)), vb = map.lookup(normalize(b));
    // Both sit inside the same wrapped bilinear cell.
    EXPECT_NEAR(va.x, vb.x, 2e-3f);
  }
}

TEST(LightSampler, ConstantMapIsUniform) {
  const EnvironmentMap map = EnvironmentMap::constant(0.5f, 16, 8);
  const LightSampler sampler(map);
  Pcg32 rng = make_stream(4, 4);
  for (int i = 0; i < 256; ++i) {
    const LightSample s = sampler.sample(rng.next_float(), rng.next_float());
    EXPECT_NEAR(s.pdf, 1.f / (4.f * kPi), 1e-3f);
    EXPECT_NEAR(length(s.dir), 1.f, 1e-4f);
  }
}

TEST(LightSampler, SingleTexelSupport) {
  ImageBuffer img(16, 8, 3, Colorspace::kLinear);
  img.set_rgb(5, 3, {10.f, 10.f, 10.f});
  const EnvironmentMap map{std::move(img)};
  const LightSampler sampler(map);
  Pcg32 rng = make_stream(5, 5);
  for (int i = 0; i < 512; ++i) {
    const LightSample s = sampler.sample(rng.next_float(), rng.next_float());
    float u, v;
    map.direction_to_uv(s.dir, &u, &v);
    EXPECT_EQ(static_cast<int>(u * 16) % 16, 5);
    EXPECT_EQ(std::min(static_cast<int>(v * 8), 7), 3);
  }
}

TEST(LightSampler, AllBlackMapFailsConstruction) {
  const EnvironmentMap map = EnvironmentMap::constant(0.f);
  EXPECT_THROW(LightSampler{map}, std::invalid_argument);
}

TEST(LightSampler, PdfIntegratesToOne) {
  const EnvironmentMap map = random_map(32, 16, 11);
  const LightSampler sampler(map);
  double total = 0.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 32; ++x)
      total += sampler.pdf(map.texel_center_direction(x, y)) * map.texel_solid_angle(y);
  EXPECT_NEAR(total, 1.0, 0.01);
}

// Monte Carlo irradiance against direct texel quadrature; the importance
// sampler must make the estimator land within 1% at 65,536 samples.
TEST(LightSampler, IrradianceMatchesQuadrature) {
  const EnvironmentMap map = random_map(32, 16, 21);
  const LightSampler sampler(map);
  const Vec3 normal = normalize(Vec3{0.3f, 0.8f, -0.5f});
  const Vec3 reference = map.irradiance_quadrature(normal);

  const int n = 65536;
  const int grid = 256;  // stratified over the unit square
  Pcg32 rng = make_stream(7, 7);
  Vec3 acc{};
  for (int i = 0; i < n; ++i) {
    const float u1 = ((i % grid) + rng.next_float()) / grid;
    const float u2 = ((i / grid) + rng.next_float()) / grid;
    const LightSample s = sampler.sample(u1, u2);
    const float cos_term = dot(s.dir, normal);
    if (cos_term <= 0.f || s.pdf <= 0.f) continue;
    acc += s.radiance * (cos_term / s.pdf);
  }
  acc = acc / static_cast<float>(n);
  for (int c = 0; c < 3; ++c)
    EXPECT_NEAR(acc[c], reference[c], 0.01f * std::abs(reference[c]));
}

TEST(Augment, FullPeriodShiftIsIdentity) {
  const EnvironmentMap map = random_map(16, 8, 31);
  Augmentation aug;
  aug.horizontal_shift = map.width();
  const EnvironmentMap out = apply_augmentation(map, aug);
  for (size_t i = 0; i < map.radiance().size(); ++i)
    EXPECT_EQ(out.radiance().data()[i], map.radiance().data()[i]);
}

TEST(Augment, DeterministicGivenSeed) {
  const EnvironmentMap map = random_map(16, 8, 32);
  const EnvironmentMap a = augment(map, 99);
  const EnvironmentMap b = augment(map, 99);
  for (size_t i = 0; i < map.radiance().size(); ++i)
    EXPECT_EQ(a.radiance().data()[i], b.radiance().data()[i]);
}

TEST(Augment, PreservesTotalFluxExactly) {
  const EnvironmentMap map = random_map(16, 8, 33);
  for (uint64_t seed = 0; seed < 16; ++seed) {
    const EnvironmentMap out = augment(map, seed);
    EXPECT_EQ(out.total_flux(), map.total_flux());
  }
}

TEST(Augment, PreservesTexelMultisetUpToChannelPermutation) {
  const EnvironmentMap map = random_map(8, 4, 34);
  const EnvironmentMap out = augment(map, 5);
  // Compare sorted per-channel-sorted texel triples.
  auto canonical = [](const EnvironmentMap& m) {
    std::vector<std::array<float, 3>> texels;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        const Vec3 t = m.texel(x, y);
        std::array<float, 3> a{t.x, t.y, t.z};
        std::sort(a.begin(), a.end());
        texels.push_back(a);
      }
    std::sort(texels.begin(), texels.end());
    return texels;
  };
  EXPECT_EQ(canonical(map), canonical(out));
}

}  // namespace
}  // namespace relight
