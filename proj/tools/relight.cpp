// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline driver: dataset generation, geometry fitting, mesh extraction,
// radiance-cue rendering, relit-sample generation or import, latent
// distillation, novel-view rendering, and evaluation.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>

#include "relight/dataset_gen.h"
#include "relight/field/checkpoint.h"
#include "relight/field/trainer.h"
#include "relight/image_io.h"
#include "relight/pipeline.h"
#include "relight/sample_set.h"

namespace fs = std::filesystem;
using namespace relight;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string profile = "desk";
  std::string work_dir = ".";
  uint64_t seed = 7;
  bool deterministic = false;
  bool force = false;
  std::vector<std::string> overrides;

  PipelineConfig build() const {
    PipelineConfig c;
    if (!config_path.empty()) {
      c = PipelineConfig::from_json_file(config_path);
    } else {
      c = profile == "paper" ? PipelineConfig::paper_profile() : PipelineConfig::desk_profile();
    }
    c.seed = seed;
    if (deterministic) c.deterministic = true;
    c.work_dir = work_dir;
    for (const std::string& kv : overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got " + kv);
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "pipeline config JSON");
  cmd->add_option("--profile", args->profile, "desk|paper")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--work", args->work_dir, "pipeline work directory");
  cmd->add_option("--seed", args->seed, "global seed");
  cmd->add_flag("--deterministic", args->deterministic, "bit-reproducible mode");
  cmd->add_flag("--force", args->force, "rerun even when stage manifests match");
  cmd->add_option("--set", args->overrides, "override config fields by dotted path (k=v)")
      ->take_all();
}

int run_pipeline_stage(const CommonArgs& args, const std::string& stage) {
  const PipelineConfig config = args.build();
  const StageResult r = run_stage(config, stage, args.force);
  std::printf("%s: %s (%zu outputs)\n", stage.c_str(), r.skipped ? "skipped" : "done",
              r.outputs.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relight: relightable 3D reconstruction via sample distillation"};
  app.require_subcommand(1);

  CommonArgs args;

  // --- make-dataset: paired-relighting generator or pipeline input stage ---
  auto* make_ds = app.add_subcommand("make-dataset",
                                     "render paired-relighting data (with --objects) or "
                                     "synthesize the pipeline's input views");
  std::vector<std::string> object_paths;
  std::string envmap_dir, out_dir = "dataset";
  int ds_cams = 4, ds_lightings = 2, ds_spp = 128, ds_res = 128;
  make_ds->add_option("--objects", object_paths, "OBJ meshes to render")->take_all();
  make_ds->add_option("--envmaps", envmap_dir, "directory of PFM environment maps");
  make_ds->add_option("--out", out_dir, "output directory");
  make_ds->add_option("--cams", ds_cams, "camera poses per object");
  make_ds->add_option("--lightings", ds_lightings, "environment maps per camera");
  make_ds->add_option("--spp", ds_spp, "samples per pixel");
  make_ds->add_option("--res", ds_res, "render resolution");
  add_common(make_ds, &args);

  // --- pipeline stages ---
  auto* fit = app.add_subcommand("fit-geometry", "fit the radiance field to the input views");
  add_common(fit, &args);
  auto* extract = app.add_subcommand("extract-mesh", "marching cubes over the baked density");
  add_common(extract, &args);

  auto* cues_cmd = app.add_subcommand("render-cues", "render radiance-cue stacks");
  std::string cue_mesh, cue_envmap, cue_cameras, cue_out = "cues";
  int cue_spp_flag = 64;
  uint64_t cue_seed = 7;
  cues_cmd->add_option("--mesh", cue_mesh, "OBJ mesh (standalone mode)");
  cues_cmd->add_option("--envmap", cue_envmap, "target environment PFM");
  cues_cmd->add_option("--cameras", cue_cameras, "camera set JSON");
  cues_cmd->add_option("--spp", cue_spp_flag, "samples per pixel");
  cues_cmd->add_option("--out", cue_out, "output directory");
  cues_cmd->add_option("--cue-seed", cue_seed, "render seed (standalone mode)");
  add_common(cues_cmd, &args);

  auto* gen = app.add_subcommand("generate-samples", "oracle relit samples + anchors");
  add_common(gen, &args);

  auto* import_cmd = app.add_subcommand("import-samples", "bring external relit samples into "
                                                          "the pipeline");
  std::string import_dir_flag;
  import_cmd->add_option("--dir", import_dir_flag, "directory with view{i}_sample{s}.png + "
                                                   "manifest.json")
      ->required();
  add_common(import_cmd, &args);

  auto* distill_cmd = app.add_subcommand("distill", "latent-NeRF distillation of the samples");
  add_common(distill_cmd, &args);

  auto* render_cmd = app.add_subcommand("render", "render held-out views from the distilled model");
  int latent_row = -1;
  render_cmd->add_option("--latent-row", latent_row, "latent table row (-1 renders Z=0)");
  add_common(render_cmd, &args);

  auto* eval_cmd = app.add_subcommand("evaluate", "scale-aligned PSNR-L/PSNR-H/SSIM report");
  std::string eval_pred, eval_gt, eval_mode = "per-image", eval_out = "report.csv";
  eval_cmd->add_option("--pred", eval_pred, "prediction directory (standalone mode)");
  eval_cmd->add_option("--gt", eval_gt, "ground-truth directory");
  eval_cmd->add_option("--mode", eval_mode, "per-image|global")
      ->check(CLI::IsMember({"per-image", "global"}));
  eval_cmd->add_option("--out", eval_out, "CSV output path (JSON twin alongside)");
  add_common(eval_cmd, &args);

  auto* meta = app.add_subcommand("relight", "run the full pipeline end to end");
  add_common(meta, &args);

  auto* grid_cmd = app.add_subcommand("emit-grid", "labeled contact sheet from images");
  std::vector<std::string> grid_images;
  std::vector<std::string> grid_labels;
  std::string grid_out = "grid.png";
  int grid_cols = 4;
  grid_cmd->add_option("images", grid_images, "input images (PFM or PNG)")->required();
  grid_cmd->add_option("--label", grid_labels, "one label per image")->take_all();
  grid_cmd->add_option("--out", grid_out, "output PNG");
  grid_cmd->add_option("--cols", grid_cols, "grid columns");

  CLI11_PARSE(app, argc, argv);

  try {
    if (make_ds->parsed()) {
      if (!object_paths.empty()) {
        std::vector<DatasetObject> objects;
        for (const std::string& path : object_paths)
          objects.push_back({load_obj(path), std::nullopt, fs::path(path).stem().string()});
        std::vector<EnvironmentMap> pool;
        if (!envmap_dir.empty()) {
          std::vector<std::string> paths;
          for (const auto& e : fs::directory_iterator(envmap_dir))
            if (e.path().extension() == ".pfm") paths.push_back(e.path().string());
          std::sort(paths.begin(), paths.end());
          for (const auto& p : paths) pool.push_back(EnvironmentMap::load(p));
        }
        if (pool.empty())
          throw std::runtime_error("make-dataset: empty envmap pool (--envmaps)");
        DatasetConfig dcfg;
        dcfg.cameras_per_object = ds_cams;
        dcfg.lightings_per_camera = ds_lightings;
        dcfg.spp = ds_spp;
        dcfg.width = dcfg.height = ds_res;
        make_dataset(objects, pool, dcfg, args.seed, out_dir);
        std::printf("make-dataset: wrote %s\n", out_dir.c_str());
        return 0;
      }
      return run_pipeline_stage(args, "make-dataset");
    }
    if (fit->parsed()) return run_pipeline_stage(args, "fit-geometry");
    if (extract->parsed()) return run_pipeline_stage(args, "extract-mesh");
    if (cues_cmd->parsed()) {
      if (!cue_mesh.empty()) {
        const TriangleMesh mesh = load_obj(cue_mesh);
        const EnvironmentMap envmap = EnvironmentMap::load(cue_envmap);
        const auto cameras = load_cameras(cue_cameras);
        fs::create_directories(cue_out);
        for (size_t i = 0; i < cameras.size(); ++i) {
          const CueStack stack = render_cues(mesh, envmap, cameras[i], cue_spp_flag,
                                             hash_combine(cue_seed, i));
          stack.save(cue_out, "view" + std::to_string(i));
        }
        std::printf("render-cues: %zu views -> %s\n", cameras.size(), cue_out.c_str());
        return 0;
      }
      return run_pipeline_stage(args, "render-cues");
    }
    if (gen->parsed()) return run_pipeline_stage(args, "generate-samples");
    if (import_cmd->parsed()) {
      PipelineConfig config = args.build();
      config.provider = "import";
      config.import_dir = import_dir_flag;
      const StageResult r = run_stage(config, "generate-samples", true);
      std::printf("import-samples: %zu files staged\n", r.outputs.size());
      return 0;
    }
    if (distill_cmd->parsed()) return run_pipeline_stage(args, "distill");
    if (render_cmd->parsed()) {
      if (latent_row >= 0) {
        const PipelineConfig config = args.build();
        const auto ckpt = field::load_checkpoint(config.work_dir + "/distilled.ckpt");
        const auto held = load_cameras(config.work_dir + "/cams_held.json");
        fs::create_directories(config.work_dir + "/renders_latent");
        for (size_t i = 0; i < held.size(); ++i) {
          const ImageBuffer img =
              field::render_novel(ckpt.params, &ckpt.latents, held[i], latent_row);
          write_pfm(img, config.work_dir + "/renders_latent/held" + std::to_string(i) + "_row" +
                             std::to_string(latent_row) + ".pfm");
        }
        std::printf("render: latent row %d -> renders_latent/\n", latent_row);
        return 0;
      }
      return run_pipeline_stage(args, "render");
    }
    if (eval_cmd->parsed()) {
      const AlignmentMode mode =
          eval_mode == "global" ? AlignmentMode::kGlobal : AlignmentMode::kPerImage;
      if (!eval_pred.empty()) {
        const EvalReport report = evaluate_dirs(eval_pred, eval_gt, mode);
        write_report(report, eval_out);
        std::printf("evaluate: mean PSNR-L %.3f  PSNR-H %.3f  SSIM %.4f -> %s\n",
                    report.mean_psnr_l, report.mean_psnr_h, report.mean_ssim, eval_out.c_str());
        return 0;
      }
      return run_pipeline_stage(args, "evaluate");
    }
    if (meta->parsed()) {
      const PipelineConfig config = args.build();
      const EvalReport report = run_relight(config, args.force);
      std::printf("relight: mean PSNR-L %.3f  PSNR-H %.3f  SSIM %.4f\n", report.mean_psnr_l,
                  report.mean_psnr_h, report.mean_ssim);
      return 0;
    }
    if (grid_cmd->parsed()) {
      std::vector<ImageBuffer> images;
      for (const std::string& path : grid_images) {
        ImageBuffer img = read_image(path);
        images.push_back(img.colorspace() == Colorspace::kSrgbEncoded ? img : srgb_encode(img));
      }
      ImageBuffer sheet = emit_grid(images, grid_labels, grid_cols);
      sheet.set_colorspace(Colorspace::kSrgbEncoded);
      write_png(sheet, grid_out);
      std::printf("emit-grid: %zu images -> %s\n", images.size(), grid_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
