#pragma once

#include <optional>
#include <string>
#include <vector>

#include "io/volume.hpp"
#include "models/predictor.hpp"
#include "models/unet.hpp"
#include "pipeline/config.hpp"
#include "roi/roi.hpp"

namespace gliomaseg::pipeline {

/// Binary-stage input: the brain bounding box cut out of the case and
/// resized (trilinear for images, nearest for labels) to the network input.
struct BinaryView {
  roi::CropRecord record;   // plain box crop, no padding
  io::MultiModalCase resized;
};

BinaryView binary_view(const io::MultiModalCase& c, const io::Dims3& input_dims);

/// Foreground = any tumor label, as a one-channel volume.
io::ChannelVolume tumor_mask(const io::LabelVolume& labels);
/// One channel per class of the internal alphabet.
io::ChannelVolume one_hot(const io::LabelVolume& labels, int classes = 4);

/// Binary probabilities mapped back to the case grid (nearest), zero outside
/// the brain box.
io::ChannelVolume binary_probabilities(const models::UNet& model, const BinaryView& view);

struct RoiBox {
  roi::BBox3 box;  // expanded by the tolerance
  bool fallback = false;  // empty mask, whole-brain box used instead
};

RoiBox roi_from_probabilities(const io::ChannelVolume& probs, const io::MultiModalCase& c, float threshold,
                              int tolerance);
RoiBox roi_from_labels(const io::MultiModalCase& c, int tolerance);

/// Multiclass-stage input. With a box the case is cropped and padded to
/// min_dims; without one the whole grid is used.
struct MulticlassView {
  io::MultiModalCase cropped;
  roi::CropRecord record;
  bool roi_fallback = false;
};

MulticlassView multiclass_view(const io::MultiModalCase& c, const std::optional<RoiBox>& roi,
                               const io::Dims3& min_dims);

struct CasePrediction {
  std::string case_id;
  io::LabelVolume mask;           // original grid, internal alphabet
  std::vector<float> confidence;  // original grid, -energy
  roi::CropRecord record;
  bool roi_fallback = false;
};

/// Sliding-window prediction inside the view (optionally over the 8 TTA
/// reflections), argmax, and restoration to the original grid. Outside the
/// crop the mask is background and the confidence the largest in-crop value.
CasePrediction predict_view(const models::UNet& multiclass, const MulticlassView& view, const models::PatchSpec& patch,
                            bool tta);

struct PredictOptions {
  io::Dims3 binary_input{32, 32, 32};
  float threshold = 0.5f;
  int tolerance = 12;
  io::Dims3 min_dims{24, 24, 32};
  models::PatchSpec patch;
  bool tta = true;
};

PredictOptions predict_options(const PipelineConfig& config);

/// Full pipeline for one case. A null binary model skips ROI detection and
/// segments the whole grid.
CasePrediction predict_case(const io::MultiModalCase& c, const models::UNet* binary, const models::UNet& multiclass,
                            const PredictOptions& options);

}  // namespace gliomaseg::pipeline
