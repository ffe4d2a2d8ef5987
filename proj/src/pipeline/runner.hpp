#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "io/dataset.hpp"
#include "json.hpp"
#include "models/unet.hpp"
#include "pipeline/config.hpp"
#include "pipeline/train.hpp"

namespace gliomaseg::pipeline {

/// Loads a checkpoint and checks that it holds the expected architecture.
models::UNet load_stage_model(const std::filesystem::path& checkpoint, models::Architecture arch);

/// Predicts the listed cases (all manifest cases when empty) and writes the
/// per-case files to out_dir. Without a binary checkpoint the whole grid is
/// segmented. Returns a summary with one record per case.
nlohmann::json predict_manifest(const PipelineConfig& config, const io::DatasetManifest& manifest,
                                const std::optional<std::filesystem::path>& binary_checkpoint,
                                const std::filesystem::path& multiclass_checkpoint,
                                const std::filesystem::path& out_dir, const std::vector<std::string>& case_ids = {});

nlohmann::json train_result_json(const TrainResult& r);
nlohmann::json split_json(const Split& s);
Split manifest_split(const PipelineConfig& config, const io::DatasetManifest& manifest);

}  // namespace gliomaseg::pipeline
