// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/pipeline.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "relight/dataset_gen.h"
#include "relight/field/checkpoint.h"
#include "relight/field/trainer.h"
#include "relight/image_io.h"
#include "relight/marching_cubes.h"
#include "relight/sample_set.h"

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config.
// ---------------------------------------------------------------------------

PipelineConfig PipelineConfig::desk_profile() { return {}; }

PipelineConfig PipelineConfig::paper_profile() {
  PipelineConfig c;
  c.profile = "paper";
  c.view_count = 100;
  c.view_width = 512;
  c.view_height = 512;
  c.view_focal = 512.f;
  c.view_spp = 512;
  c.cue_spp = 512;
  c.sample_spp = 512;
  c.samples_per_view = 16;
  c.geometry_opt = field::OptimizerConfig::paper_scale();
  c.distill_opt = field::OptimizerConfig::paper_scale();
  return c;
}

namespace {

json optimizer_to_json(const field::OptimizerConfig& o) {
  return {{"steps", o.steps},       {"warmup", o.warmup_steps},
          {"batch", o.ray_batch},   {"lr_init", o.lr_init},
          {"lr_final", o.lr_final}, {"grid_lr_multiplier", o.grid_lr_multiplier},
          {"beta1", o.beta1},       {"beta2", o.beta2},
          {"eps", o.eps}};
}

void optimizer_from_json(const json& j, field::OptimizerConfig* o) {
  o->steps = j.value("steps", o->steps);
  o->warmup_steps = j.value("warmup", o->warmup_steps);
  o->ray_batch = j.value("batch", o->ray_batch);
  o->lr_init = j.value("lr_init", o->lr_init);
  o->lr_final = j.value("lr_final", o->lr_final);
  o->grid_lr_multiplier = j.value("grid_lr_multiplier", o->grid_lr_multiplier);
  o->beta1 = j.value("beta1", o->beta1);
  o->beta2 = j.value("beta2", o->beta2);
  o->eps = j.value("eps", o->eps);
}

json config_to_json_impl(const PipelineConfig& c) {
  return {{"profile", c.profile},
          {"seed", c.seed},
          {"deterministic", c.deterministic},
          {"work_dir", c.work_dir},
          {"scene", c.scene},
          {"views",
           {{"count", c.view_count},
            {"held_out", c.held_out_count},
            {"width", c.view_width},
            {"height", c.view_height},
            {"focal", c.view_focal},
            {"radius", c.orbit_radius},
            {"spp", c.view_spp}}},
          {"envmaps",
           {{"width", c.envmap_width},
            {"source", c.source_envmap},
            {"target", c.target_envmap},
            {"source_path", c.envmap_path},
            {"target_path", c.target_envmap_path}}},
          {"mesh",
           {{"grid_resolution", c.mesh_grid_resolution},
            {"iso", c.mesh_iso},
            {"smooth_iterations", c.smooth_iterations},
            {"smooth_weight", c.smooth_weight}}},
          {"cues", {{"spp", c.cue_spp}}},
          {"samples",
           {{"provider", c.provider},
            {"import_dir", c.import_dir},
            {"count", c.samples_per_view},
            {"spp", c.sample_spp},
            {"anchor_spp", c.anchor_spp}}},
          {"field",
           {{"grid_levels", c.field.grid_levels},
            {"latent_dim", c.field.latent_dim},
            {"coarse_samples", c.field.coarse_samples},
            {"fine_samples", c.field.fine_samples},
            {"density_scale", c.field.density_scale}}},
          {"optimizer", optimizer_to_json(c.geometry_opt)},
          {"distill", optimizer_to_json(c.distill_opt)},
          {"eval", {{"mode", c.eval_mode == AlignmentMode::kPerImage ? "per-image" : "global"}}}};
}

void config_from_json_impl(const json& j, PipelineConfig* c) {
  c->profile = j.value("profile", c->profile);
  c->seed = j.value("seed", c->seed);
  c->deterministic = j.value("deterministic", c->deterministic);
  c->work_dir = j.value("work_dir", c->work_dir);
  c->scene = j.value("scene", c->scene);
  if (j.contains("views")) {
    const json& v = j["views"];
    c->view_count = v.value("count", c->view_count);
    c->held_out_count = v.value("held_out", c->held_out_count);
    c->view_width = v.value("width", c->view_width);
    c->view_height = v.value("height", c->view_height);
    c->view_focal = v.value("focal", c->view_focal);
    c->orbit_radius = v.value("radius", c->orbit_radius);
    c->view_spp = v.value("spp", c->view_spp);
  }
  if (j.contains("envmaps")) {
    const json& v = j["envmaps"];
    c->envmap_width = v.value("width", c->envmap_width);
    c->source_envmap = v.value("source", c->source_envmap);
    c->target_envmap = v.value("target", c->target_envmap);
    c->envmap_path = v.value("source_path", c->envmap_path);
    c->target_envmap_path = v.value("target_path", c->target_envmap_path);
  }
  if (j.contains("mesh")) {
    const json& v = j["mesh"];
    c->mesh_grid_resolution = v.value("grid_resolution", c->mesh_grid_resolution);
    c->mesh_iso = v.value("iso", c->mesh_iso);
    c->smooth_iterations = v.value("smooth_iterations", c->smooth_iterations);
    c->smooth_weight = v.value("smooth_weight", c->smooth_weight);
  }
  if (j.contains("cues")) c->cue_spp = j["cues"].value("spp", c->cue_spp);
  if (j.contains("samples")) {
    const json& v = j["samples"];
    c->provider = v.value("provider", c->provider);
    c->import_dir = v.value("import_dir", c->import_dir);
    c->samples_per_view = v.value("count", c->samples_per_view);
    c->sample_spp = v.value("spp", c->sample_spp);
    c->anchor_spp = v.value("anchor_spp", c->anchor_spp);
  }
  if (j.contains("field")) {
    const json& v = j["field"];
    if (v.contains("grid_levels")) c->field.grid_levels = v["grid_levels"].get<std::array<int, 2>>();
    c->field.latent_dim = v.value("latent_dim", c->field.latent_dim);
    c->field.coarse_samples = v.value("coarse_samples", c->field.coarse_samples);
    c->field.fine_samples = v.value("fine_samples", c->field.fine_samples);
    c->field.density_scale = v.value("density_scale", c->field.density_scale);
  }
  if (j.contains("optimizer")) optimizer_from_json(j["optimizer"], &c->geometry_opt);
  if (j.contains("distill")) optimizer_from_json(j["distill"], &c->distill_opt);
  if (j.contains("eval"))
    c->eval_mode = j["eval"].value("mode", "per-image") == std::string("global")
                       ? AlignmentMode::kGlobal
                       : AlignmentMode::kPerImage;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open config");
  json j;
  f >> j;
  PipelineConfig c =
      j.value("profile", "desk") == std::string("paper") ? paper_profile() : desk_profile();
  config_from_json_impl(j, &c);
  return c;
}

std::string PipelineConfig::to_json() const { return config_to_json_impl(*this).dump(2); }

void PipelineConfig::set(const std::string& dotted_key, const std::string& value) {
  json j = config_to_json_impl(*this);
  json* node = &j;
  size_t start = 0;
  for (;;) {
    const size_t dot = dotted_key.find('.', start);
    const std::string key = dotted_key.substr(start, dot - start);
    if (dot == std::string::npos) {
      if (!node->contains(key)) throw std::invalid_argument("unknown config key " + dotted_key);
      json& leaf = (*node)[key];
      if (leaf.is_string()) {
        leaf = value;
      } else if (leaf.is_boolean()) {
        leaf = value == "true" || value == "1";
      } else if (leaf.is_number_integer() || leaf.is_number_unsigned()) {
        leaf = std::stoll(value);
      } else if (leaf.is_number_float()) {
        leaf = std::stod(value);
      } else {
        leaf = json::parse(value);
      }
      break;
    }
    if (!node->contains(key)) throw std::invalid_argument("unknown config key " + dotted_key);
    node = &(*node)[key];
    start = dot + 1;
  }
  config_from_json_impl(j, this);
}

// ---------------------------------------------------------------------------
// Hashing, manifests, locking.
// ---------------------------------------------------------------------------

uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for hashing");
  uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

struct WorkDirLock {
  std::string path;
  explicit WorkDirLock(const std::string& work_dir) : path(work_dir + "/lock") {
    fs::create_directories(work_dir);
    if (fs::exists(path))
      throw std::runtime_error(path + ": work dir is locked by another pipeline instance");
    std::ofstream f(path);
    f << "locked\n";
  }
  ~WorkDirLock() { std::error_code ec; fs::remove(path, ec); }
};

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Config fields each stage actually depends on; changing anything else must
// not invalidate the stage.
json stage_config_snapshot(const PipelineConfig& c, const std::string& stage) {
  const json full = config_to_json_impl(c);
  if (stage == "make-dataset")
    return {{"seed", c.seed}, {"scene", c.scene}, {"views", full["views"]},
            {"envmaps", full["envmaps"]}};
  if (stage == "fit-geometry")
    return {{"seed", c.seed}, {"field", full["field"]}, {"optimizer", full["optimizer"]},
            {"deterministic", c.deterministic}};
  if (stage == "extract-mesh") return {{"mesh", full["mesh"]}};
  if (stage == "render-cues") return {{"seed", c.seed}, {"cues", full["cues"]}};
  if (stage == "generate-samples") return {{"seed", c.seed}, {"samples", full["samples"]}};
  if (stage == "distill")
    return {{"seed", c.seed}, {"distill", full["distill"]},
            {"latent_dim", c.field.latent_dim}, {"deterministic", c.deterministic}};
  if (stage == "render") return {{"seed", c.seed}};
  if (stage == "evaluate") return {{"eval", full["eval"]}};
  throw std::invalid_argument("unknown stage " + stage);
}

std::string manifest_path(const PipelineConfig& c, const std::string& stage) {
  return c.work_dir + "/manifests/" + stage + ".json";
}

json input_hashes(const std::vector<std::string>& inputs) {
  json h = json::object();
  for (const std::string& path : inputs) h[path] = hex64(hash_file(path));
  return h;
}

bool manifest_matches(const PipelineConfig& c, const std::string& stage,
                      const std::vector<std::string>& inputs) {
  const std::string path = manifest_path(c, stage);
  if (!fs::exists(path)) return false;
  json manifest;
  try {
    std::ifstream f(path, std::ios::binary);
    f >> manifest;
  } catch (...) {
    return false;
  }
  if (manifest.value("config", json()) != stage_config_snapshot(c, stage)) return false;
  for (const std::string& in : inputs) {
    if (!fs::exists(in)) return false;
    if (manifest["inputs"].value(in, "") != hex64(hash_file(in))) return false;
  }
  for (const auto& out : manifest.value("outputs", json::array()))
    if (!fs::exists(out.get<std::string>())) return false;
  return true;
}

void write_manifest(const PipelineConfig& c, const std::string& stage,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  fs::create_directories(c.work_dir + "/manifests");
  const json manifest = {{"stage", stage},
                         {"inputs", input_hashes(inputs)},
                         {"config", stage_config_snapshot(c, stage)},
                         {"seed", c.seed},
                         {"outputs", outputs}};
  std::ofstream f(manifest_path(c, stage), std::ios::binary);
  f << manifest.dump(2);
}

// ---------------------------------------------------------------------------
// Builtin assets.
// ---------------------------------------------------------------------------

Scene builtin_scene(const PipelineConfig& c) {
  if (c.scene == "toy") return make_toy_scene();
  // A mesh path: load it and sample a dataset-style material.
  Scene scene;
  TriangleMesh mesh = load_obj(c.scene);
  Pcg32 rng = make_stream(c.seed, 0x5ce9eull);
  scene.add_object(mesh, sample_dataset_material(rng));
  smooth_normals(scene.mutable_mesh(), 10, 0.5f);
  scene.commit();
  return scene;
}

std::string view_name(int i) { return "view" + std::to_string(i) + ".pfm"; }
std::string held_name(int i) { return "held" + std::to_string(i) + ".pfm"; }

std::vector<Camera> load_train_cams(const PipelineConfig& c) {
  return load_cameras(c.work_dir + "/cams_train.json");
}
std::vector<Camera> load_held_cams(const PipelineConfig& c) {
  return load_cameras(c.work_dir + "/cams_held.json");
}

EnvironmentMap load_stage_envmap(const PipelineConfig& c, bool target) {
  return EnvironmentMap::load(c.work_dir + (target ? "/envmaps/target.pfm" : "/envmaps/source.pfm"));
}

}  // namespace

void write_builtin_envmap(int index, int width, const std::string& path) {
  const int height = width / 2;
  ImageBuffer img(width, height, 3, Colorspace::kLinear);
  Pcg32 rng = make_stream(0xe2f6ull, static_cast<uint64_t>(index));
  // Gradient sky plus a few Gaussian light blobs; index varies hue/placement.
  const Vec3 zenith = Vec3{0.5f, 0.6f, 0.9f} * (0.8f + 0.4f * rng.next_float());
  const Vec3 horizon = Vec3{0.9f, 0.7f, 0.5f} * (0.5f + 0.5f * rng.next_float());
  const Vec3 ground = Vec3{0.25f, 0.22f, 0.2f} * (0.6f + 0.6f * rng.next_float());
  const int blobs = 2 + static_cast<int>(rng.next_u32(3));
  std::vector<float> bx(blobs), by(blobs), bs(blobs);
  std::vector<Vec3> bc(blobs);
  for (int b = 0; b < blobs; ++b) {
    bx[b] = rng.next_float() * width;
    by[b] = rng.next_float() * height * 0.6f;
    bs[b] = width * (0.02f + 0.05f * rng.next_float());
    bc[b] = Vec3{1.5f + 6.f * rng.next_float(), 1.5f + 6.f * rng.next_float(),
                 1.5f + 6.f * rng.next_float()};
  }
  for (int y = 0; y < height; ++y) {
    const float v = (y + 0.5f) / height;
    for (int x = 0; x < width; ++x) {
      Vec3 c = v < 0.55f ? lerp(zenith, horizon, v / 0.55f) : lerp(horizon, ground, (v - 0.55f) / 0.45f);
      for (int b = 0; b < blobs; ++b) {
        float dx = std::abs(x + 0.5f - bx[b]);
        dx = std::min(dx, width - dx);  // wrap
        const float dy = y + 0.5f - by[b];
        c += bc[b] * std::exp(-0.5f * (dx * dx + dy * dy) / (bs[b] * bs[b]));
      }
      img.set_rgb(x, y, c);
    }
  }
  write_pfm(img, path);
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

namespace {

StageResult stage_make_dataset(const PipelineConfig& c) {
  StageResult result;
  fs::create_directories(c.work_dir + "/envmaps");
  fs::create_directories(c.work_dir + "/views");
  fs::create_directories(c.work_dir + "/views_held");

  const std::string source_path = c.work_dir + "/envmaps/source.pfm";
  const std::string target_path = c.work_dir + "/envmaps/target.pfm";
  if (c.envmap_path.empty()) {
    write_builtin_envmap(c.source_envmap, c.envmap_width, source_path);
  } else {
    fs::copy_file(c.envmap_path, source_path, fs::copy_options::overwrite_existing);
  }
  if (c.target_envmap_path.empty()) {
    write_builtin_envmap(c.target_envmap, c.envmap_width, target_path);
  } else {
    fs::copy_file(c.target_envmap_path, target_path, fs::copy_options::overwrite_existing);
  }
  result.outputs.push_back(source_path);
  result.outputs.push_back(target_path);

  const int total = c.view_count + c.held_out_count;
  const auto cams = make_orbit_cameras(total, {0.f, 0.f, 0.f}, c.orbit_radius, c.view_focal,
                                       c.view_width, c.view_height, c.seed);
  const std::vector<Camera> train(cams.begin(), cams.begin() + c.view_count);
  const std::vector<Camera> held(cams.begin() + c.view_count, cams.end());
  save_cameras(train, c.work_dir + "/cams_train.json");
  save_cameras(held, c.work_dir + "/cams_held.json");
  result.outputs.push_back(c.work_dir + "/cams_train.json");
  result.outputs.push_back(c.work_dir + "/cams_held.json");

  const Scene scene = builtin_scene(c);
  const EnvironmentMap source = EnvironmentMap::load(source_path);
  RenderOptions opt;
  opt.spp = c.view_spp;
  opt.seed = hash_combine(c.seed, 0x71e3ull);
  for (int i = 0; i < c.view_count; ++i) {
    const std::string path = c.work_dir + "/views/" + view_name(i);
    write_pfm(path_trace(scene, source, train[i], opt), path);
    result.outputs.push_back(path);
  }
  for (int i = 0; i < c.held_out_count; ++i) {
    const std::string path = c.work_dir + "/views_held/" + held_name(i);
    write_pfm(path_trace(scene, source, held[i], opt), path);
    result.outputs.push_back(path);
  }
  return result;
}

StageResult stage_fit_geometry(const PipelineConfig& c) {
  StageResult result;
  const auto cams = load_train_cams(c);
  std::vector<field::TrainView> views;
  for (size_t i = 0; i < cams.size(); ++i)
    views.push_back({read_pfm(c.work_dir + "/views/" + view_name(static_cast<int>(i))), cams[i]});

  field::OptimizerConfig opt = c.geometry_opt;
  opt.seed = c.seed;
  field::RadianceFieldParams params = fit_geometry(views, c.field, opt, c.regularizer);
  save_checkpoint(params, nullptr, opt.steps, c.work_dir + "/geometry.ckpt");
  result.outputs.push_back(c.work_dir + "/geometry.ckpt.json");
  result.outputs.push_back(c.work_dir + "/geometry.ckpt.bin");
  return result;
}

StageResult stage_extract_mesh(const PipelineConfig& c) {
  StageResult result;
  const auto ckpt = field::load_checkpoint(c.work_dir + "/geometry.ckpt");
  const int r = c.mesh_grid_resolution;
  const ScalarGrid density = field::bake_density_grid(ckpt.params, {r, r, r});
  density.save(c.work_dir + "/density.grid");
  TriangleMesh mesh = extract_level_set(density, c.mesh_iso);
  smooth_normals(mesh, c.smooth_iterations, c.smooth_weight);
  save_obj(mesh, c.work_dir + "/mesh.obj");
  result.outputs = {c.work_dir + "/density.grid", c.work_dir + "/density.grid.json",
                    c.work_dir + "/mesh.obj"};
  return result;
}

StageResult stage_render_cues(const PipelineConfig& c) {
  StageResult result;
  fs::create_directories(c.work_dir + "/cues");
  const TriangleMesh mesh = load_obj(c.work_dir + "/mesh.obj");
  const EnvironmentMap target = load_stage_envmap(c, true);
  const auto cams = load_train_cams(c);
  for (size_t i = 0; i < cams.size(); ++i) {
    const CueStack stack =
        render_cues(mesh, target, cams[i], c.cue_spp, hash_combine(c.seed, 0xc0e5ull + i));
    const std::string stem = "view" + std::to_string(i);
    stack.save(c.work_dir + "/cues", stem);
    for (int p = 0; p < 4; ++p)
      result.outputs.push_back(c.work_dir + "/cues/" + stem + "_cue" + std::to_string(p) +
                               ".pfm");
    result.outputs.push_back(c.work_dir + "/cues/" + stem + "_cues12.pfm");
  }
  return result;
}

StageResult stage_generate_samples(const PipelineConfig& c) {
  StageResult result;
  const std::string sample_dir = c.work_dir + "/samples";
  const auto train_cams = load_train_cams(c);
  const auto held_cams = load_held_cams(c);

  if (c.provider == "import") {
    // External samples: validate through the importer, then re-export into
    // the canonical layout.
    const RelitSampleSet set = import_samples(c.import_dir);
    if (set.num_views() != static_cast<int>(train_cams.size()))
      throw std::runtime_error("imported sample set view count does not match the cameras");
    export_samples(set, sample_dir);
  } else {
    const Scene scene = builtin_scene(c);
    const EnvironmentMap target = load_stage_envmap(c, true);
    RenderOptions ropt;
    ropt.spp = c.sample_spp;
    const RelightingOracle oracle(scene, target, ropt);

    RelitSampleSet set(static_cast<int>(train_cams.size()), c.samples_per_view,
                       SampleProvenance::kOracle);
    set.set_envmap_id("target");
    for (size_t i = 0; i < train_cams.size(); ++i) {
      SampleRequest request;
      request.view_id = static_cast<int>(i);
      request.sample_count = c.samples_per_view;
      request.seed = hash_combine(c.seed, 0x9a3eull);
      request.envmap_id = "target";
      const auto images = oracle.generate(request, train_cams[i]);
      for (int s = 0; s < c.samples_per_view; ++s)
        set.set_image(static_cast<int>(i), s, images[s]);
    }
    export_samples(set, sample_dir);

    // Anchor relights (z = 0 ground truth) at the held-out poses, rendered
    // clean for evaluation.
    fs::create_directories(c.work_dir + "/anchors");
    RenderOptions aopt;
    aopt.spp = c.anchor_spp;
    const RelightingOracle anchor_oracle(scene, target, aopt);
    for (size_t i = 0; i < held_cams.size(); ++i) {
      const std::string path = c.work_dir + "/anchors/" + held_name(static_cast<int>(i));
      write_pfm(anchor_oracle.anchor(held_cams[i], hash_combine(c.seed, 0xa2c4ull),
                                     static_cast<int>(i)),
                path);
      result.outputs.push_back(path);
    }
  }

  result.outputs.push_back(sample_dir + "/manifest.json");
  const RelitSampleSet reread = import_samples(sample_dir);
  for (int i = 0; i < reread.num_views(); ++i)
    for (int s = 0; s < reread.samples_per_view(); ++s)
      result.outputs.push_back(sample_dir + "/view" + std::to_string(i) + "_sample" +
                               std::to_string(s) + ".png");
  return result;
}

StageResult stage_distill(const PipelineConfig& c) {
  StageResult result;
  // The distiller consumes the on-disk set through the importer, the same
  // code path external diffusion samples take.
  const RelitSampleSet set = import_samples(c.work_dir + "/samples");
  const auto cams = load_train_cams(c);
  const auto geometry = field::load_checkpoint(c.work_dir + "/geometry.ckpt");

  field::OptimizerConfig opt = c.distill_opt;
  opt.seed = hash_combine(c.seed, 0xd157ull);
  field::DistillResult distilled =
      field::distill(set, cams, geometry.params, opt, c.field.latent_dim);
  save_checkpoint(distilled.params, &distilled.latents, opt.steps,
                  c.work_dir + "/distilled.ckpt");
  result.outputs = {c.work_dir + "/distilled.ckpt.json", c.work_dir + "/distilled.ckpt.bin"};
  return result;
}

StageResult stage_render(const PipelineConfig& c) {
  StageResult result;
  fs::create_directories(c.work_dir + "/renders");
  const auto ckpt = field::load_checkpoint(c.work_dir + "/distilled.ckpt");
  const auto held = load_held_cams(c);
  for (size_t i = 0; i < held.size(); ++i) {
    // Inference default: Z = 0 for all views.
    const ImageBuffer img = field::render_novel(ckpt.params, &ckpt.latents, held[i], -1);
    const std::string path = c.work_dir + "/renders/" + held_name(static_cast<int>(i));
    write_pfm(img, path);
    result.outputs.push_back(path);
  }
  return result;
}

StageResult stage_evaluate(const PipelineConfig& c) {
  StageResult result;
  const EvalReport report =
      evaluate_dirs(c.work_dir + "/renders", c.work_dir + "/anchors", c.eval_mode);
  write_report(report, c.work_dir + "/report.csv");
  result.outputs = {c.work_dir + "/report.csv", c.work_dir + "/report.json"};
  return result;
}

std::vector<std::string> stage_inputs(const PipelineConfig& c, const std::string& stage) {
  std::vector<std::string> in;
  const std::string& w = c.work_dir;
  auto add_views = [&] {
    for (int i = 0; i < c.view_count; ++i) in.push_back(w + "/views/" + view_name(i));
    in.push_back(w + "/cams_train.json");
  };
  if (stage == "make-dataset") {
    if (!c.envmap_path.empty()) in.push_back(c.envmap_path);
    if (!c.target_envmap_path.empty()) in.push_back(c.target_envmap_path);
  } else if (stage == "fit-geometry") {
    add_views();
  } else if (stage == "extract-mesh") {
    in.push_back(w + "/geometry.ckpt.bin");
  } else if (stage == "render-cues") {
    in.push_back(w + "/mesh.obj");
    in.push_back(w + "/envmaps/target.pfm");
    in.push_back(w + "/cams_train.json");
  } else if (stage == "generate-samples") {
    in.push_back(w + "/envmaps/target.pfm");
    in.push_back(w + "/cams_train.json");
    in.push_back(w + "/cams_held.json");
  } else if (stage == "distill") {
    in.push_back(w + "/samples/manifest.json");
    in.push_back(w + "/geometry.ckpt.bin");
    in.push_back(w + "/cams_train.json");
  } else if (stage == "render") {
    in.push_back(w + "/distilled.ckpt.bin");
    in.push_back(w + "/cams_held.json");
  } else if (stage == "evaluate") {
    for (int i = 0; i < c.held_out_count; ++i) {
      in.push_back(w + "/renders/" + held_name(i));
      in.push_back(w + "/anchors/" + held_name(i));
    }
  }
  return in;
}

}  // namespace

StageResult run_stage(const PipelineConfig& c, const std::string& stage, bool force) {
  const auto& order = stage_order();
  const auto it = std::find(order.begin(), order.end(), stage);
  if (it == order.end()) throw std::invalid_argument("unknown stage " + stage);

  // Upstream manifests must exist (the stage DAG).
  for (auto up = order.begin(); up != it; ++up)
    if (!fs::exists(manifest_path(c, *up)))
      throw std::runtime_error("stage " + stage + " requires upstream stage " + *up +
                               " (missing manifest)");

  const std::vector<std::string> inputs = stage_inputs(c, stage);
  if (!force && manifest_matches(c, stage, inputs)) {
    StageResult r;
    r.skipped = true;
    return r;
  }

  StageResult result;
  if (stage == "make-dataset") result = stage_make_dataset(c);
  else if (stage == "fit-geometry") result = stage_fit_geometry(c);
  else if (stage == "extract-mesh") result = stage_extract_mesh(c);
  else if (stage == "render-cues") result = stage_render_cues(c);
  else if (stage == "generate-samples") result = stage_generate_samples(c);
  else if (stage == "distill") result = stage_distill(c);
  else if (stage == "render") result = stage_render(c);
  else if (stage == "evaluate") result = stage_evaluate(c);

  write_manifest(c, stage, inputs, result.outputs);
  return result;
}

EvalReport run_relight(const PipelineConfig& c, bool force) {
  WorkDirLock lock(c.work_dir);
  for (const std::string& stage : stage_order()) run_stage(c, stage, force);
  EvalReport report;
  std::ifstream f(c.work_dir + "/report.json", std::ios::binary);
  json j;
  f >> j;
  report.mean_psnr_l = j["mean_psnr_l"].is_string() ? kInfinity : j["mean_psnr_l"].get<double>();
  report.mean_psnr_h = j["mean_psnr_h"].is_string() ? kInfinity : j["mean_psnr_h"].get<double>();
  report.mean_ssim = j["mean_ssim"].get<double>();
  return report;
}

// ---------------------------------------------------------------------------
// Contact sheets.
// ---------------------------------------------------------------------------

namespace {

// 5x7 bitmap glyphs for labels: digits, uppercase, and a little punctuation.
const char* glyph_rows(char ch) {
  static const std::map<char, const char*> kFont = {
      {'0', "01110 10001 10011 10101 11001 10001 01110"},
      {'1', "00100 01100 00100 00100 00100 00100 01110"},
      {'2', "01110 10001 00001 00010 00100 01000 11111"},
      {'3', "11110 00001 00001 01110 00001 00001 11110"},
      {'4', "00010 00110 01010 10010 11111 00010 00010"},
      {'5', "11111 10000 11110 00001 00001 10001 01110"},
      {'6', "00110 01000 10000 11110 10001 10001 01110"},
      {'7', "11111 00001 00010 00100 01000 01000 01000"},
      {'8', "01110 10001 10001 01110 10001 10001 01110"},
      {'9', "01110 10001 10001 01111 00001 00010 01100"},
      {'A', "01110 10001 10001 11111 10001 10001 10001"},
      {'B', "11110 10001 10001 11110 10001 10001 11110"},
      {'C', "01110 10001 10000 10000 10000 10001 01110"},
      {'D', "11110 10001 10001 10001 10001 10001 11110"},
      {'E', "11111 10000 10000 11110 10000 10000 11111"},
      {'F', "11111 10000 10000 11110 10000 10000 10000"},
      {'G', "01110 10001 10000 10111 10001 10001 01111"},
      {'H', "10001 10001 10001 11111 10001 10001 10001"},
      {'I', "01110 00100 00100 00100 00100 00100 01110"},
      {'J', "00111 00010 00010 00010 00010 10010 01100"},
      {'K', "10001 10010 10100 11000 10100 10010 10001"},
      {'L', "10000 10000 10000 10000 10000 10000 11111"},
      {'M', "10001 11011 10101 10101 10001 10001 10001"},
      {'N', "10001 11001 10101 10011 10001 10001 10001"},
      {'O', "01110 10001 10001 10001 10001 10001 01110"},
      {'P', "11110 10001 10001 11110 10000 10000 10000"},
      {'Q', "01110 10001 10001 10001 10101 10010 01101"},
      {'R', "11110 10001 10001 11110 10100 10010 10001"},
      {'S', "01111 10000 10000 01110 00001 00001 11110"},
      {'T', "11111 00100 00100 00100 00100 00100 00100"},
      {'U', "10001 10001 10001 10001 10001 10001 01110"},
      {'V', "10001 10001 10001 10001 10001 01010 00100"},
      {'W', "10001 10001 10001 10101 10101 11011 10001"},
      {'X', "10001 10001 01010 00100 01010 10001 10001"},
      {'Y', "10001 10001 01010 00100 00100 00100 00100"},
      {'Z', "11111 00001 00010 00100 01000 10000 11111"},
      {'-', "00000 00000 00000 01110 00000 00000 00000"},
      {'_', "00000 00000 00000 00000 00000 00000 11111"},
      {'.', "00000 00000 00000 00000 00000 00100 00100"},
      {'=', "00000 00000 01110 00000 01110 00000 00000"},
      {' ', "00000 00000 00000 00000 00000 00000 00000"},
  };
  const auto found = kFont.find(ch);
  return found == kFont.end() ? kFont.at(' ') : found->second;
}

void draw_label(ImageBuffer& img, int x0, int y0, const std::string& text) {
  int cx = x0;
  for (char raw : text) {
    const char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    const char* rows = glyph_rows(ch);
    for (int gy = 0; gy < 7; ++gy)
      for (int gx = 0; gx < 5; ++gx) {
        if (rows[gy * 6 + gx] != '1') continue;
        const int px = cx + gx, py = y0 + gy;
        if (px < 0 || px >= img.width() || py < 0 || py >= img.height()) continue;
        for (int ch2 = 0; ch2 < img.channels(); ++ch2) img.at(px, py, ch2) = 1.f;
      }
    cx += 6;
  }
}

}  // namespace

ImageBuffer emit_grid(const std::vector<ImageBuffer>& images,
                      const std::vector<std::string>& labels, int columns) {
  if (images.empty()) throw std::invalid_argument("emit_grid: no images");
  const int w = images[0].width(), h = images[0].height();
  for (const ImageBuffer& img : images)
    if (img.width() != w || img.height() != h)
      throw std::invalid_argument("emit_grid: mixed resolutions");

  if (images.size() == 1) {
    // Single image: pass through with a label band.
    constexpr int kBand = 10;
    ImageBuffer out(w, h + kBand, 3, images[0].colorspace());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          out.at(x, y + kBand, c) = images[0].at(x, y, std::min(c, images[0].channels() - 1));
    if (!labels.empty()) draw_label(out, 1, 1, labels[0]);
    return out;
  }

  const int cols = std::max(1, columns);
  const int rows = static_cast<int>((images.size() + cols - 1) / cols);
  ImageBuffer out(w * cols, h * rows, 3, images[0].colorspace());
  for (size_t i = 0; i < images.size(); ++i) {
    const int cx = static_cast<int>(i) % cols, cy = static_cast<int>(i) / cols;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          out.at(cx * w + x, cy * h + y, c) =
              images[i].at(x, y, std::min(c, images[i].channels() - 1));
    if (i < labels.size()) draw_label(out, cx * w + 1, cy * h + 1, labels[i]);
  }
  return out;
}

}  // namespace relight
