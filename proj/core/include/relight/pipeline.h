// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relight/eval.h"
#include "relight/field/field_config.h"
#include "relight/image.h"

namespace relight {

// One configuration document drives the whole pipeline; the desk profile is
// the default and `paper` pins the full-scale settings. CLI flags override
// individual fields by dotted path (e.g. optimizer.steps=100).
struct PipelineConfig {
  std::string profile = "desk";  // desk | paper
  uint64_t seed = 7;
  bool deterministic = true;
  std::string work_dir = ".";

  // Inputs: the built-in reference scene, or a mesh on disk.
  std::string scene = "toy";

  int view_count = 32;
  int held_out_count = 8;
  int view_width = 64, view_height = 64;
  float view_focal = 64.f;
  float orbit_radius = 2.8f;
  int view_spp = 96;

  int envmap_width = 64;      // builtin procedural maps are width x width/2
  int source_envmap = 0;      // builtin pool index
  int target_envmap = 1;
  std::string envmap_path;    // overrides the builtin source/target when set
  std::string target_envmap_path;

  int mesh_grid_resolution = 128;
  float mesh_iso = 25.f;
  int smooth_iterations = 20;
  float smooth_weight = 0.5f;

  int cue_spp = 64;

  std::string provider = "oracle";  // oracle | import
  std::string import_dir;
  int samples_per_view = 8;
  int sample_spp = 64;
  int anchor_spp = 160;

  field::FieldConfig field;
  field::OptimizerConfig geometry_opt;
  field::OptimizerConfig distill_opt;
  field::RegularizerConfig regularizer;

  AlignmentMode eval_mode = AlignmentMode::kPerImage;

  static PipelineConfig desk_profile();
  static PipelineConfig paper_profile();
  static PipelineConfig from_json_file(const std::string& path);
  std::string to_json() const;
  // Dotted-path override, e.g. set("optimizer.steps", "100").
  void set(const std::string& dotted_key, const std::string& value);
};

// 64-bit FNV-1a over a file's bytes, for stage-manifest caching.
uint64_t hash_file(const std::string& path);

struct StageResult {
  bool skipped = false;  // inputs and config unchanged; stage was a no-op
  std::vector<std::string> outputs;
};

// Pipeline stages, in DAG order. Each writes a manifest recording input
// content hashes, its config snapshot, the seed, and every output file;
// rerunning with identical hashes is a no-op unless force is set.
StageResult run_stage(const PipelineConfig& config, const std::string& stage, bool force);

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> kOrder = {
      "make-dataset", "fit-geometry", "extract-mesh",      "render-cues",
      "generate-samples", "distill",  "render",            "evaluate"};
  return kOrder;
}

// The full pipeline: every stage in order. Returns the final report.
EvalReport run_relight(const PipelineConfig& config, bool force);

// Labeled contact sheet: rows x cols mosaic of equal-resolution images with
// a text label drawn into each tile (single image: label band on top).
ImageBuffer emit_grid(const std::vector<ImageBuffer>& images,
                      const std::vector<std::string>& labels, int columns);

// Procedural HDR environments for the built-in pool.
void write_builtin_envmap(int index, int width, const std::string& path);

}  // namespace relight
