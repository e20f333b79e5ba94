// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/eval.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "relight/image_io.h"

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ImageBuffer clamp_encode(const ImageBuffer& linear) {
  ImageBuffer tmp = linear;  // srgb_encode clamps to [0, 1] internally
  return srgb_encode(tmp);
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void EvalReport::finalize() {
  double sl = 0, sh = 0, ss = 0;
  int nl = 0, nh = 0;
  excluded_infinite = 0;
  for (const EvalRow& r : rows) {
    if (std::isinf(r.psnr_l) || std::isinf(r.psnr_h)) {
      ++excluded_infinite;
    } else {
      sl += r.psnr_l;
      ++nl;
      sh += r.psnr_h;
      ++nh;
    }
    ss += r.ssim;
  }
  mean_psnr_l = nl ? sl / nl : std::numeric_limits<double>::infinity();
  mean_psnr_h = nh ? sh / nh : std::numeric_limits<double>::infinity();
  mean_ssim = rows.empty() ? 0.0 : ss / rows.size();
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "view,psnr_l,psnr_h,ssim,s_r,s_g,s_b\n";
  for (const EvalRow& r : rows)
    out << r.view << ',' << fmt(r.psnr_l) << ',' << fmt(r.psnr_h) << ',' << fmt(r.ssim) << ','
        << fmt(r.scale[0]) << ',' << fmt(r.scale[1]) << ',' << fmt(r.scale[2]) << '\n';
  out << "mean," << fmt(mean_psnr_l) << ',' << fmt(mean_psnr_h) << ',' << fmt(mean_ssim)
      << ",,,\n";
  return out.str();
}

std::string EvalReport::to_json() const {
  json rows_json = json::array();
  for (const EvalRow& r : rows)
    rows_json.push_back({{"view", r.view},
                         {"psnr_l", std::isinf(r.psnr_l) ? json("inf") : json(r.psnr_l)},
                         {"psnr_h", std::isinf(r.psnr_h) ? json("inf") : json(r.psnr_h)},
                         {"ssim", r.ssim},
                         {"scale", r.scale}});
  const json doc = {
      {"mode", mode == AlignmentMode::kPerImage ? "per-image" : "global"},
      {"rows", rows_json},
      {"mean_psnr_l", std::isinf(mean_psnr_l) ? json("inf") : json(mean_psnr_l)},
      {"mean_psnr_h", std::isinf(mean_psnr_h) ? json("inf") : json(mean_psnr_h)},
      {"mean_ssim", mean_ssim},
      {"excluded_infinite", excluded_infinite}};
  return doc.dump(2);
}

EvalReport evaluate_images(const std::vector<ImageBuffer>& pred,
                           const std::vector<ImageBuffer>& gt,
                           const std::vector<std::string>& names, AlignmentMode mode) {
  if (pred.size() != gt.size() || pred.size() != names.size())
    throw std::invalid_argument("evaluate: prediction/ground-truth grids do not match");

  EvalReport report;
  report.mode = mode;
  const auto scales = channel_scales(pred, gt, mode);
  for (size_t i = 0; i < pred.size(); ++i) {
    const ImageBuffer aligned = apply_channel_scale(pred[i], scales[i]);
    const ImageBuffer pred_ldr = clamp_encode(aligned);
    const ImageBuffer gt_ldr = clamp_encode(gt[i]);

    EvalRow row;
    row.view = names[i];
    row.scale = scales[i];
    row.psnr_l = psnr(pred_ldr, gt_ldr);
    row.psnr_h = psnr(srgb_decode(pred_ldr), srgb_decode(gt_ldr));
    row.ssim = ssim(pred_ldr, gt_ldr);
    report.rows.push_back(row);
  }
  report.finalize();
  return report;
}

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                         AlignmentMode mode) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    const std::string ext = entry.path().extension().string();
    if (ext == ".pfm" || ext == ".png") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error(pred_dir + ": no .pfm or .png files");

  std::vector<ImageBuffer> pred, gt;
  for (const std::string& name : names) {
    const std::string gt_path = gt_dir + "/" + name;
    if (!fs::exists(gt_path)) throw std::runtime_error("evaluate: missing ground truth " + name);
    auto load_linear = [](const std::string& path) {
      ImageBuffer img = read_image(path);
      return img.colorspace() == Colorspace::kSrgbEncoded ? srgb_decode(img) : img;
    };
    pred.push_back(load_linear(pred_dir + "/" + name));
    gt.push_back(load_linear(gt_path));
  }
  return evaluate_images(pred, gt, names, mode);
}

void write_report(const EvalReport& report, const std::string& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error(csv_path + ": cannot open for writing");
  csv << report.to_csv();

  const std::string json_path =
      csv_path.size() > 4 && csv_path.ends_with(".csv")
          ? csv_path.substr(0, csv_path.size() - 4) + ".json"
          : csv_path + ".json";
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw std::runtime_error(json_path + ": cannot open for writing");
  js << report.to_json();
}

}  // namespace relight
