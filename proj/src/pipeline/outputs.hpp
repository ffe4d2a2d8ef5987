#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "io/dataset.hpp"
#include "losses/metrics.hpp"
#include "pipeline/stages.hpp"

namespace gliomaseg::pipeline {

/// Files per case in a predictions directory: <case>_pred.raw (labels in the
/// given encoding), <case>_conf.raw (confidence) and <case>_crop.json.
std::filesystem::path prediction_path(const std::filesystem::path& dir, const std::string& case_id);
std::filesystem::path confidence_path(const std::filesystem::path& dir, const std::string& case_id);
std::filesystem::path crop_record_path(const std::filesystem::path& dir, const std::string& case_id);

void write_prediction(const CasePrediction& p, const io::Spacing3& spacing, io::LabelEncoding encoding,
                      const std::filesystem::path& dir);

/// Region dice of every labelled manifest case against its stored prediction.
/// MissingPrediction when a file is absent, GridMismatch when grids differ.
/// A non-empty `case_ids` restricts the evaluation to those cases.
losses::AggregateReport evaluate(const io::DatasetManifest& manifest, const std::filesystem::path& predictions_dir,
                                 const std::vector<std::string>& case_ids = {});

nlohmann::json report_json(const losses::AggregateReport& report);
losses::AggregateReport report_from_json(const nlohmann::json& j);

/// Nearest-rank index into n ascending values: max(0, ceil(p/100 * n) - 1).
std::size_t nearest_rank(double percentile, std::size_t n);

struct PercentileRow {
  double percentile = 0.0;
  std::string case_id;
  double mean_dice = 0.0;
  std::filesystem::path image;
};

/// Ranks cases by mean dice and writes, for the 0/25/50/75/100th percentile
/// cases, a PNG row of mid-axial panels: FLAIR, T1-Gd, prediction, truth,
/// confidence. Also writes percentiles.png stacking the rows.
std::vector<PercentileRow> percentile_report(const losses::AggregateReport& report,
                                             const io::DatasetManifest& manifest,
                                             const std::filesystem::path& predictions_dir,
                                             const std::filesystem::path& out_dir);

/// 8-bit RGB image writer (libpng).
void write_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);

}  // namespace gliomaseg::pipeline
