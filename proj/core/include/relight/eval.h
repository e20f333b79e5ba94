// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "relight/metrics.h"

namespace relight {

struct EvalRow {
  std::string view;
  double psnr_l = 0.0;  // LDR (clamp + sRGB encode), after alignment
  double psnr_h = 0.0;  // linear values via inverse sRGB of the LDR pair
  double ssim = 0.0;
  std::array<float, 3> scale{1.f, 1.f, 1.f};
};

struct EvalReport {
  std::vector<EvalRow> rows;
  AlignmentMode mode = AlignmentMode::kPerImage;
  // Aggregates are arithmetic means over finite rows; infinite PSNR rows
  // (identical images) are excluded and counted instead of capped.
  double mean_psnr_l = 0.0, mean_psnr_h = 0.0, mean_ssim = 0.0;
  int excluded_infinite = 0;

  void finalize();
  std::string to_csv() const;
  std::string to_json() const;
};

// Pairs of prediction/ground-truth images in linear space. Alignment runs
// in linear space before LDR clamping; LDR metrics then apply to the
// clamped, sRGB-encoded pair.
EvalReport evaluate_images(const std::vector<ImageBuffer>& pred,
                           const std::vector<ImageBuffer>& gt,
                           const std::vector<std::string>& names, AlignmentMode mode);

// Directory form: matches *.pfm (linear) or *.png (decoded to linear) files
// by identical filename in both directories.
EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                         AlignmentMode mode);

void write_report(const EvalReport& report, const std::string& csv_path);

}  // namespace relight
