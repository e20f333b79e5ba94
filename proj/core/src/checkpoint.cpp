// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/field/checkpoint.h"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace relight::field {

using nlohmann::json;

namespace {

json config_to_json(const FieldConfig& c) {
  return {{"grid_levels", c.grid_levels},
          {"density_features", c.density_features},
          {"appearance_features", c.appearance_features},
          {"hidden_width", c.hidden_width},
          {"bottleneck_width", c.bottleneck_width},
          {"normal_hidden", c.normal_hidden},
          {"latent_dim", c.latent_dim},
          {"mod_hidden", c.mod_hidden},
          {"sh_bands", c.sh_bands},
          {"coarse_samples", c.coarse_samples},
          {"fine_samples", c.fine_samples},
          {"density_scale", c.density_scale},
          {"appearance_weight_cutoff", c.appearance_weight_cutoff},
          {"bounds_lo", {c.bounds.lo.x, c.bounds.lo.y, c.bounds.lo.z}},
          {"bounds_hi", {c.bounds.hi.x, c.bounds.hi.y, c.bounds.hi.z}},
          {"background", {c.background.x, c.background.y, c.background.z}}};
}

FieldConfig config_from_json(const json& j) {
  FieldConfig c;
  c.grid_levels = j.at("grid_levels").get<std::array<int, 2>>();
  c.density_features = j.at("density_features").get<int>();
  c.appearance_features = j.at("appearance_features").get<int>();
  c.hidden_width = j.at("hidden_width").get<int>();
  c.bottleneck_width = j.at("bottleneck_width").get<int>();
  c.normal_hidden = j.at("normal_hidden").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.mod_hidden = j.at("mod_hidden").get<int>();
  c.sh_bands = j.at("sh_bands").get<int>();
  c.coarse_samples = j.at("coarse_samples").get<int>();
  c.fine_samples = j.at("fine_samples").get<int>();
  c.density_scale = j.at("density_scale").get<float>();
  c.appearance_weight_cutoff = j.at("appearance_weight_cutoff").get<float>();
  const auto& lo = j.at("bounds_lo");
  const auto& hi = j.at("bounds_hi");
  c.bounds.lo = {lo[0].get<float>(), lo[1].get<float>(), lo[2].get<float>()};
  c.bounds.hi = {hi[0].get<float>(), hi[1].get<float>(), hi[2].get<float>()};
  const auto& bg = j.at("background");
  c.background = {bg[0].get<float>(), bg[1].get<float>(), bg[2].get<float>()};
  return c;
}

void write_block(std::ofstream& f, const float* data, size_t n) {
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

void read_block(std::ifstream& f, float* data, size_t n) {
  f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<size_t>(f.gcount()) != n * sizeof(float))
    throw std::runtime_error("checkpoint: truncated tensor block");
}

}  // namespace

void save_checkpoint(const RadianceFieldParams& params, const LatentTable* latents, int step,
                     const std::string& path_stem) {
  json tensors = json::array();
  size_t offset = 0;
  for (const TensorView& v : params.tensors()) {
    tensors.push_back({{"name", v.name}, {"shape", v.shape}, {"offset", offset}});
    offset += v.size;
  }
  const bool with_latents = latents != nullptr && latents->rows() > 0;
  if (with_latents) {
    tensors.push_back({{"name", "latent_codes"},
                       {"shape", {latents->rows(), latents->dim()}},
                       {"offset", offset}});
    offset += latents->codes().size();
    tensors.push_back({{"name", "mod_w1"},
                       {"shape", {latents->hidden(), latents->dim()}},
                       {"offset", offset}});
    offset += latents->mod_w1().size();
    tensors.push_back({{"name", "mod_w2"},
                       {"shape", {2 * latents->bottleneck(), latents->hidden()}},
                       {"offset", offset}});
    offset += latents->mod_w2().size();
  }

  const json manifest = {{"tensors", tensors},
                         {"config", config_to_json(params.config())},
                         {"step", step},
                         {"total_values", offset}};
  std::ofstream jf(path_stem + ".json", std::ios::binary);
  if (!jf) throw std::runtime_error(path_stem + ".json: cannot open for writing");
  jf << manifest.dump(2);

  std::ofstream bf(path_stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error(path_stem + ".bin: cannot open for writing");
  write_block(bf, params.values().data(), params.values().size());
  if (with_latents) {
    write_block(bf, latents->codes().data(), latents->codes().size());
    write_block(bf, latents->mod_w1().data(), latents->mod_w1().size());
    write_block(bf, latents->mod_w2().data(), latents->mod_w2().size());
  }
}

Checkpoint load_checkpoint(const std::string& path_stem) {
  std::ifstream jf(path_stem + ".json", std::ios::binary);
  if (!jf) throw std::runtime_error(path_stem + ".json: cannot open for reading");
  json manifest;
  jf >> manifest;

  Checkpoint ckpt;
  ckpt.step = manifest.at("step").get<int>();
  const FieldConfig config = config_from_json(manifest.at("config"));
  ckpt.params = RadianceFieldParams(config, 0);

  std::ifstream bf(path_stem + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error(path_stem + ".bin: cannot open for reading");
  read_block(bf, ckpt.params.values().data(), ckpt.params.values().size());

  bool has_latents = false;
  int rows = 0, dim = 0;
  for (const auto& t : manifest.at("tensors")) {
    if (t.at("name") == "latent_codes") {
      has_latents = true;
      rows = t.at("shape")[0].get<int>();
      dim = t.at("shape")[1].get<int>();
    }
  }
  if (has_latents) {
    ckpt.latents = LatentTable(rows, dim, config.bottleneck_width, config.mod_hidden, 0);
    read_block(bf, ckpt.latents.codes().data(), ckpt.latents.codes().size());
    read_block(bf, ckpt.latents.mod_w1().data(), ckpt.latents.mod_w1().size());
    read_block(bf, ckpt.latents.mod_w2().data(), ckpt.latents.mod_w2().size());
  }
  return ckpt;
}

}  // namespace relight::field
