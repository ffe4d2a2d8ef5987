#include "pipeline/runner.hpp"

#include <chrono>
#include <cmath>

#include "common/error.hpp"
#include "models/checkpoint.hpp"
#include "pipeline/outputs.hpp"
#include "pipeline/stages.hpp"

namespace gliomaseg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

models::UNet load_stage_model(const fs::path& checkpoint, models::Architecture arch) {
  models::UNet model = models::model_from_checkpoint(models::read_checkpoint(checkpoint));
  if (model.config().arch != arch) {
    fail(ErrorCode::CheckpointMismatch,
         checkpoint.string() + " holds a " +
             (model.config().arch == models::Architecture::Binary ? "binary" : "multiclass") + " network");
  }
  return model;
}

json predict_manifest(const PipelineConfig& config, const io::DatasetManifest& manifest,
                      const std::optional<fs::path>& binary_checkpoint, const fs::path& multiclass_checkpoint,
                      const fs::path& out_dir, const std::vector<std::string>& case_ids) {
  std::optional<models::UNet> binary;
  if (binary_checkpoint) binary.emplace(load_stage_model(*binary_checkpoint, models::Architecture::Binary));
  const models::UNet multiclass = load_stage_model(multiclass_checkpoint, models::Architecture::Multiclass);
  const PredictOptions options = predict_options(config);
  const io::NormRegion region = config.norm_region == "all" ? io::NormRegion::All : io::NormRegion::NonzeroOnly;

  std::vector<std::string> ids = case_ids;
  if (ids.empty()) {
    for (const auto& e : manifest.entries) ids.push_back(e.case_id);
  }
  json cases = json::array();
  for (const auto& id : ids) {
    const auto t0 = std::chrono::steady_clock::now();
    const io::MultiModalCase c = io::load_case(manifest, id, region);
    const CasePrediction p = predict_case(c, binary ? &*binary : nullptr, multiclass, options);
    write_prediction(p, c.modalities[0].spacing(), manifest.label_encoding, out_dir);
    cases.push_back({{"case_id", id},
                     {"roi_fallback", p.roi_fallback},
                     {"crop", p.record.to_json()},
                     {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
  }
  return {{"out_dir", out_dir.string()}, {"tta", options.tta}, {"roi", binary.has_value()}, {"cases", cases}};
}

json train_result_json(const TrainResult& r) {
  json history = json::array();
  for (const auto& e : r.history) {
    json h = {{"epoch", e.epoch}, {"seconds", e.seconds}};
    h["train_loss"] = std::isfinite(e.train_loss) ? json(e.train_loss) : json(nullptr);
    h["val_dice"] = e.val_dice ? json(*e.val_dice) : json(nullptr);
    history.push_back(std::move(h));
  }
  return {{"checkpoint", r.checkpoint.string()},
          {"best_val_dice", r.best_val_dice},
          {"best_epoch", r.best_epoch},
          {"seconds", r.seconds},
          {"history", history}};
}

json split_json(const Split& s) { return {{"train", s.train}, {"val", s.val}}; }

Split manifest_split(const PipelineConfig& config, const io::DatasetManifest& manifest) {
  std::vector<std::string> ids;
  for (const auto& e : manifest.entries) ids.push_back(e.case_id);
  return split_cases(ids, config.val_fraction, config.seed);
}

}  // namespace gliomaseg::pipeline
