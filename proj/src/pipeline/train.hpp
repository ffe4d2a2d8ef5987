#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "io/dataset.hpp"
#include "pipeline/config.hpp"

namespace gliomaseg::pipeline {

/// Seeded shuffle of the sorted case ids; the first round(n * val_fraction)
/// become validation cases.
struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
};
Split split_cases(std::vector<std::string> ids, double val_fraction, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained network
  double train_loss = 0.0;
  std::optional<double> val_dice;
  double seconds = 0.0;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<EpochRecord> history;
  double best_val_dice = -1.0;
  int best_epoch = 0;
  double seconds = 0.0;
};

/// Binary ROI network on brain-box crops resized to config.binary_input.
/// Validation metric: whole-tumor dice on the original grid.
TrainResult train_binary(const PipelineConfig& config, const io::DatasetManifest& manifest,
                         const std::filesystem::path& out_dir);

/// Multiclass network on ROI crops. The ROI comes from the binary checkpoint
/// when given, otherwise from the ground-truth labels; config.use_roi = false
/// trains on whole grids instead. Validation metric: mean region dice.
TrainResult train_multiclass(const PipelineConfig& config, const io::DatasetManifest& manifest,
                             const std::optional<std::filesystem::path>& binary_checkpoint,
                             const std::filesystem::path& out_dir);

}  // namespace gliomaseg::pipeline
