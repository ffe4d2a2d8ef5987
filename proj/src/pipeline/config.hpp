#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "io/volume.hpp"
#include "json.hpp"
#include "models/predictor.hpp"
#include "models/unet.hpp"
#include "optim/optim.hpp"

namespace gliomaseg::pipeline {

struct AugmentConfig {
  double elastic_prob = 0.5;
  double elastic_sigma_min = 2.0;
  double elastic_sigma_max = 2.0;
  double elastic_magnitude = 25.0;
  double rotation_prob = 0.5;
  double rotation_deg = 15.0;
  double brightness_prob = 0.5;
  double brightness = 0.1;
};

struct StageConfig {
  models::UNetConfig model;
  std::string loss = "LC";
  optim::OptimizerSpec optimizer;
  int epochs = 300;
  int batch = 2;
  AugmentConfig augment;
};

struct PhantomSpec {
  io::Dims3 dims{64, 64, 48};
  int count = 25;
  std::uint64_t seed = 7;
  double noise = 0.05;
  std::array<double, 2> brain_radius{0.70, 0.85};  // fraction of the half-extent
  std::array<double, 2> edema_radius{8.0, 12.0};    // voxels
  std::array<double, 2> core_fraction{0.6, 0.8};  // of the edema radii
  std::array<double, 2> necrosis_fraction{0.45, 0.65};  // of the core radii
};

struct PipelineConfig {
  std::string preset = "toy";
  std::uint64_t seed = 7;
  double val_fraction = 0.2;
  std::string norm_region = "nonzero";

  StageConfig binary;
  io::Dims3 binary_input{32, 32, 32};
  double binary_threshold = 0.5;

  StageConfig multiclass;
  models::PatchSpec patch;
  io::Dims3 min_dims{24, 24, 32};
  int tolerance = 12;
  int patches_per_case = 1;
  bool use_roi = true;

  bool tta = true;
  int eval_every = 1;

  PhantomSpec phantom;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Preset JSON ("toy" or "paper"); ConfigError for anything else.
nlohmann::json preset_json(const std::string& name);

/// Sets a dotted key ("multiclass.epochs") to a value parsed as JSON, falling
/// back to a plain string. ConfigError for unknown keys.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Preset named in the file (default toy) overlaid with the file's keys,
/// then the overrides in order.
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
PipelineConfig make_config(const std::string& preset, const std::vector<std::string>& overrides);

}  // namespace gliomaseg::pipeline
