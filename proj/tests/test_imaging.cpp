// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "relight/camera.h"
#include "relight/image_io.h"
#include "relight/rng.h"

namespace relight {
namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("relight_imaging_" + name)).string();
}

ImageBuffer random_linear(int w, int h, int ch, uint64_t seed, float scale = 1.f) {
  ImageBuffer img(w, h, ch, Colorspace::kLinear);
  Pcg32 rng = make_stream(seed, 0x1317ull);
  for (float& v : img.pixels()) v = rng.next_float() * scale;
  return img;
}

TEST(Srgb, TransferFixedPointsAndReference) {
  EXPECT_EQ(srgb_encode_value(0.f), 0.f);
  EXPECT_EQ(srgb_encode_value(1.f), 1.f);
  // 1.055 * 0.5^(1/2.4) - 0.055
  EXPECT_NEAR(srgb_encode_value(0.5f), 0.735357f, 1e-5f);
  EXPECT_EQ(srgb_decode_value(0.f), 0.f);
  EXPECT_NEAR(srgb_decode_value(0.735357f), 0.5f, 1e-5f);
}

TEST(Srgb, RoundTripIsIdentity) {
  ImageBuffer img = random_linear(17, 9, 3, 1);
  const ImageBuffer back = srgb_decode(srgb_encode(img));
  for (size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6f);
}

TEST(Srgb, EncodeIsMonotone) {
  Pcg32 rng = make_stream(2, 0);
  std::vector<float> xs(256);
  for (float& x : xs) x = rng.next_float();
  std::sort(xs.begin(), xs.end());
  for (size_t i = 1; i < xs.size(); ++i)
    EXPECT_GE(srgb_encode_value(xs[i]), srgb_encode_value(xs[i - 1]));
}

TEST(Srgb, ClampsHdrBeforeEncoding) {
  ImageBuffer img(2, 1, 3, Colorspace::kLinear);
  img.set_rgb(0, 0, {3.5f, -0.25f, 0.5f});
  const ImageBuffer enc = srgb_encode(img);
  EXPECT_EQ(enc.at(0, 0, 0), 1.f);
  EXPECT_EQ(enc.at(0, 0, 1), 0.f);
}

TEST(Srgb, RejectsNonFiniteAndOutOfRange) {
  ImageBuffer img(1, 1, 3, Colorspace::kLinear);
  img.at(0, 0, 1) = kInfinity;
  EXPECT_THROW(srgb_encode(img), std::invalid_argument);

  ImageBuffer enc(1, 1, 3, Colorspace::kSrgbEncoded);
  enc.at(0, 0, 0) = 1.5f;
  EXPECT_THROW(srgb_decode(enc), std::invalid_argument);
}

TEST(ImageIo, PfmRoundTripIsBitExact) {
  const ImageBuffer img = random_linear(23, 11, 3, 3, 10.f);
  const std::string path = temp_path("roundtrip.pfm");
  write_pfm(img, path);
  const ImageBuffer back = read_pfm(path);
  ASSERT_EQ(back.width(), img.width());
  ASSERT_EQ(back.height(), img.height());
  for (size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back.data()[i], img.data()[i]);
}

TEST(ImageIo, PngRoundTripExactAfterQuantization) {
  ImageBuffer img(13, 7, 3, Colorspace::kSrgbEncoded);
  Pcg32 rng = make_stream(4, 0);
  for (float& v : img.pixels()) v = static_cast<float>(rng.next_u32(256)) / 255.f;
  const std::string path = temp_path("roundtrip.png");
  write_png(img, path);
  const ImageBuffer back = read_png(path);
  for (size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back.data()[i], img.data()[i]);
}

TEST(ImageIo, TwelveChannelPfmRoundTrip) {
  const ImageBuffer cue = random_linear(9, 5, 12, 5, 2.f);
  const std::string path = temp_path("cues12.pfm");
  write_pfm(cue, path);
  const ImageBuffer stacked = read_pfm(path);
  ASSERT_EQ(stacked.height(), cue.height() * 4);
  const ImageBuffer back = unstack_cue_planes(stacked);
  ASSERT_EQ(back.channels(), 12);
  for (size_t i = 0; i < cue.size(); ++i) EXPECT_EQ(back.data()[i], cue.data()[i]);
}

TEST(ImageIo, MalformedHeaderRejected) {
  const std::string path = temp_path("bad.pfm");
  std::ofstream f(path, std::ios::binary);
  f << "XX\n4 4\n-1.0\n";
  f.close();
  EXPECT_THROW(read_pfm(path), std::runtime_error);
}

TEST(ImageIo, ExtensionDispatch) {
  const ImageBuffer img = random_linear(6, 4, 3, 8);
  const std::string path = temp_path("dispatch.pfm");
  write_image(img, path);
  EXPECT_EQ(read_image(path).colorspace(), Colorspace::kLinear);
  EXPECT_THROW(read_image(temp_path("nope.tiff")), std::runtime_error);
}

TEST(Camera, LookAtProducesValidRotation) {
  const Camera cam = Camera::look_at({2.f, 1.5f, -0.7f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f},
                                     64.f, 64, 64);
  EXPECT_TRUE(cam.is_valid());
  // Center pixel looks at the target.
  const Ray ray = cam.ray_through(32.f, 32.f);
  const Vec3 to_target = normalize(Vec3{0.f, 0.f, 0.f} - cam.position);
  EXPECT_NEAR(dot(ray.dir, to_target), 1.f, 1e-5f);
}

TEST(Camera, JsonRoundTrip) {
  std::vector<Camera> cams;
  for (int i = 0; i < 3; ++i)
    cams.push_back(Camera::look_at({2.f + i, 1.f, -0.5f * i}, {0.f, 0.1f, 0.f},
                                   {0.f, 1.f, 0.f}, 48.f + i, 64, 48));
  const std::string path = temp_path("cams.json");
  save_cameras(cams, path);
  const auto back = load_cameras(path);
  ASSERT_EQ(back.size(), cams.size());
  for (size_t i = 0; i < cams.size(); ++i) {
    EXPECT_EQ(back[i].focal, cams[i].focal);
    for (int r = 0; r < 3; ++r) EXPECT_EQ(back[i].rotation[r], cams[i].rotation[r]);
    EXPECT_EQ(back[i].position, cams[i].position);
  }
}

TEST(Camera, InvalidRotationRejected) {
  Camera cam = Camera::look_at({2.f, 0.f, 0.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 32.f, 8, 8);
  cam.rotation[0] = {2.f, 0.f, 0.f};
  EXPECT_FALSE(cam.is_valid());
  EXPECT_THROW(cameras_from_json("[{\"transform\":[2,0,0,0,0,1,0,0,0,0,1,0],"
                                 "\"focal\":32,\"principal_point\":[4,4],"
                                 "\"resolution\":[8,8]}]"),
               std::runtime_error);
}

}  // namespace
}  // namespace relight
