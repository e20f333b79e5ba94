// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/image_io.h"

#include <png.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace relight {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::string lower_ext(const std::string& path) {
  const size_t dot = path.rfind('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

}  // namespace

// 12-channel buffers travel as four RGB planes stacked top-to-bottom.
ImageBuffer stack_cue_planes(const ImageBuffer& twelve) {
  ImageBuffer out(twelve.width(), twelve.height() * 4, 3, twelve.colorspace());
  for (int p = 0; p < 4; ++p)
    for (int y = 0; y < twelve.height(); ++y)
      for (int x = 0; x < twelve.width(); ++x)
        for (int c = 0; c < 3; ++c)
          out.at(x, p * twelve.height() + y, c) = twelve.at(x, y, p * 3 + c);
  return out;
}

ImageBuffer unstack_cue_planes(const ImageBuffer& stacked) {
  if (stacked.height() % 4 != 0)
    throw std::runtime_error("stacked cue image height is not a multiple of 4");
  const int h = stacked.height() / 4;
  ImageBuffer out(stacked.width(), h, 12, stacked.colorspace());
  for (int p = 0; p < 4; ++p)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < stacked.width(); ++x)
        for (int c = 0; c < 3; ++c) out.at(x, y, p * 3 + c) = stacked.at(x, p * h + y, c);
  return out;
}

ImageBuffer read_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "pfm") return read_pfm(path);
  if (ext == "png") return read_png(path);
  fail(path, "unsupported image extension '" + ext + "'");
}

void write_image(const ImageBuffer& image, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "pfm") {
    write_pfm(image, path);
  } else if (ext == "png") {
    write_png(image, path);
  } else {
    fail(path, "unsupported image extension '" + ext + "'");
  }
}

ImageBuffer read_pfm(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(path, "cannot open for reading");

  char magic[3] = {};
  if (std::fscanf(f.get(), "%2s", magic) != 1) fail(path, "missing PFM magic");
  int channels = 0;
  if (std::strcmp(magic, "PF") == 0) {
    channels = 3;
  } else if (std::strcmp(magic, "Pf") == 0) {
    channels = 1;
  } else {
    fail(path, "malformed PFM header (expected PF or Pf)");
  }

  long width = 0, height = 0;
  double scale = 0.0;
  if (std::fscanf(f.get(), "%ld %ld %lf", &width, &height, &scale) != 3)
    fail(path, "malformed PFM header fields");
  if (std::fgetc(f.get()) != '\n') fail(path, "malformed PFM header terminator");
  if (width <= 0 || height <= 0 || width > 1 << 20 || height > 1 << 20)
    fail(path, "PFM dimension overflow");
  if (scale >= 0.0) fail(path, "big-endian PFM not supported (scale must be negative)");

  ImageBuffer out(static_cast<int>(width), static_cast<int>(height), channels,
                  Colorspace::kLinear);
  const size_t row_elems = static_cast<size_t>(width) * channels;
  // PFM scanlines are stored bottom-up.
  for (long y = height - 1; y >= 0; --y) {
    float* row = out.data() + static_cast<size_t>(y) * row_elems;
    if (std::fread(row, sizeof(float), row_elems, f.get()) != row_elems)
      fail(path, "truncated PFM payload");
  }
  return out;
}

void write_pfm(const ImageBuffer& image, const std::string& path) {
  if (image.channels() == 12) {
    write_pfm(stack_cue_planes(image), path);
    return;
  }
  if (image.channels() != 1 && image.channels() != 3)
    fail(path, "PFM supports 1 or 3 channels");

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");
  std::fprintf(f.get(), "%s\n%d %d\n-1.0\n", image.channels() == 3 ? "PF" : "Pf", image.width(),
               image.height());
  const size_t row_elems = static_cast<size_t>(image.width()) * image.channels();
  for (int y = image.height() - 1; y >= 0; --y) {
    const float* row = image.data() + static_cast<size_t>(y) * row_elems;
    if (std::fwrite(row, sizeof(float), row_elems, f.get()) != row_elems)
      fail(path, "short write");
  }
}

ImageBuffer read_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(path, "cannot open for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "malformed PNG");
  }

  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_expand(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));

  std::vector<uint8_t> bytes(static_cast<size_t>(width) * height * 3);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + static_cast<size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageBuffer out(width, height, 3, Colorspace::kSrgbEncoded);
  for (size_t i = 0; i < bytes.size(); ++i) out.data()[i] = bytes[i] / 255.f;
  return out;
}

void write_png(const ImageBuffer& image, const std::string& path) {
  if (image.channels() != 3) fail(path, "PNG output requires a 3-channel buffer");
  if (image.colorspace() != Colorspace::kSrgbEncoded)
    fail(path, "PNG output requires an srgb-encoded buffer");

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write error");
  }

  png_init_io(png, f.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c)
        row[static_cast<size_t>(x) * 3 + c] =
            static_cast<uint8_t>(std::lround(saturate(image.at(x, y, c)) * 255.f));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace relight
