#include "pipeline/stages.hpp"

#include <algorithm>
#include <iostream>

#include "augment/resample.hpp"
#include "common/error.hpp"
#include "uncertainty/uncertainty.hpp"

namespace gliomaseg::pipeline {

namespace {

roi::CropRecord box_record(const io::Dims3& dims, const roi::BBox3& box) {
  roi::CropRecord r;
  r.original = dims;
  r.box = box;
  return r;
}

roi::BBox3 full_box(const io::Dims3& d) { return {{0, 0, 0}, {d.x - 1, d.y - 1, d.z - 1}}; }

io::MultiModalCase case_from_channels(const io::ChannelVolume& v, std::optional<io::LabelVolume> label,
                                      const std::string& id) {
  io::MultiModalCase c;
  c.case_id = id;
  for (int m = 0; m < io::kModalityCount; ++m) {
    const auto ch = v.channel(m);
    c.modalities[m] = io::Volume(v.dims, {1.0, 1.0, 1.0}, std::vector<float>(ch.begin(), ch.end()),
                                 io::modality_key(static_cast<io::Modality>(m)));
  }
  c.label = std::move(label);
  return c;
}

}  // namespace

BinaryView binary_view(const io::MultiModalCase& c, const io::Dims3& input_dims) {
  const auto brain = roi::brain_bbox(c);
  BinaryView view;
  view.record = box_record(c.dims(), brain ? *brain : full_box(c.dims()));
  const io::ChannelVolume resized = augment::resize_trilinear(roi::crop_channels(c.stacked(), view.record), input_dims);
  std::optional<io::LabelVolume> label;
  if (c.label) label = augment::resize_nearest(roi::crop_labels(*c.label, view.record), input_dims);
  view.resized = case_from_channels(resized, std::move(label), c.case_id);
  return view;
}

io::ChannelVolume tumor_mask(const io::LabelVolume& labels) {
  io::ChannelVolume out(labels.dims, 1);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) out.data[i] = labels.labels[i] != 0 ? 1.0f : 0.0f;
  return out;
}

io::ChannelVolume one_hot(const io::LabelVolume& labels, int classes) {
  io::ChannelVolume out(labels.dims, classes);
  const std::size_t n = labels.dims.count();
  for (std::size_t i = 0; i < n; ++i) {
    const int k = labels.labels[i];
    if (k >= classes) fail(ErrorCode::DataError, "label " + std::to_string(k) + " outside the class range");
    out.data[static_cast<std::size_t>(k) * n + i] = 1.0f;
  }
  return out;
}

io::ChannelVolume binary_probabilities(const models::UNet& model, const BinaryView& view) {
  const models::Prediction p = models::predict_grid(model, view.resized.stacked());
  const io::ChannelVolume back = augment::resize_nearest(p.probs, view.record.cropped_dims());
  return roi::restore_to_original(back, view.record, {0.0f});
}

RoiBox roi_from_probabilities(const io::ChannelVolume& probs, const io::MultiModalCase& c, float threshold,
                              int tolerance) {
  RoiBox out;
  auto box = roi::mask_bbox(probs.channel(0), probs.dims, threshold);
  if (!box) {
    std::cerr << "warning: " << c.case_id << ": binary mask is empty, using the brain bounding box\n";
    box = roi::brain_bbox(c);
    if (!box) box = full_box(c.dims());
    out.fallback = true;
  }
  out.box = roi::expand_bbox(*box, tolerance, c.dims());
  return out;
}

RoiBox roi_from_labels(const io::MultiModalCase& c, int tolerance) {
  if (!c.label) fail(ErrorCode::DataError, c.case_id + " has no label for a ground-truth ROI");
  RoiBox out;
  auto box = roi::label_bbox(*c.label);
  if (!box) {
    box = roi::brain_bbox(c);
    if (!box) box = full_box(c.dims());
    out.fallback = true;
  }
  out.box = roi::expand_bbox(*box, tolerance, c.dims());
  return out;
}

MulticlassView multiclass_view(const io::MultiModalCase& c, const std::optional<RoiBox>& roi,
                               const io::Dims3& min_dims) {
  MulticlassView v;
  if (!roi) {
    v.cropped = c;
    v.record = box_record(c.dims(), full_box(c.dims()));
    return v;
  }
  auto [cropped, record] = roi::crop_case(c, roi->box, min_dims);
  v.cropped = std::move(cropped);
  v.record = record;
  v.roi_fallback = roi->fallback;
  return v;
}

CasePrediction predict_view(const models::UNet& multiclass, const MulticlassView& view, const models::PatchSpec& patch,
                            bool tta) {
  const models::PatchPredictor net = models::model_predictor(multiclass);
  const models::PatchPredictor windowed = [&](const io::ChannelVolume& in) {
    return models::sliding_window_predict(net, in, patch);
  };
  const io::ChannelVolume input = view.cropped.stacked();
  const models::Prediction p = tta ? uncertainty::tta_aggregate(windowed, input) : windowed(input);

  const io::Dims3 d = p.probs.dims;
  const std::size_t n = d.count();
  io::LabelVolume cropped_mask{d, {1.0, 1.0, 1.0}, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < p.probs.channels; ++k) {
      if (p.probs.data[static_cast<std::size_t>(k) * n + i] > p.probs.data[static_cast<std::size_t>(best) * n + i]) {
        best = k;
      }
    }
    cropped_mask.labels[i] = static_cast<std::uint8_t>(best);
  }

  io::ChannelVolume conf(d, 1);
  conf.data = uncertainty::confidence_map(p.logits);
  const float fill = *std::max_element(conf.data.begin(), conf.data.end());

  CasePrediction out;
  out.case_id = view.cropped.case_id;
  out.record = view.record;
  out.roi_fallback = view.roi_fallback;
  out.mask = roi::restore_labels(cropped_mask, view.record);
  out.confidence = roi::restore_to_original(conf, view.record, {fill}).data;
  return out;
}

PredictOptions predict_options(const PipelineConfig& config) {
  PredictOptions o;
  o.binary_input = config.binary_input;
  o.threshold = static_cast<float>(config.binary_threshold);
  o.tolerance = config.tolerance;
  o.min_dims = config.min_dims;
  o.patch = config.patch;
  o.tta = config.tta;
  return o;
}

CasePrediction predict_case(const io::MultiModalCase& c, const models::UNet* binary, const models::UNet& multiclass,
                            const PredictOptions& options) {
  std::optional<RoiBox> roi;
  if (binary != nullptr) {
    const BinaryView bv = binary_view(c, options.binary_input);
    roi = roi_from_probabilities(binary_probabilities(*binary, bv), c, options.threshold, options.tolerance);
  }
  return predict_view(multiclass, multiclass_view(c, roi, options.min_dims), options.patch, options.tta);
}

}  // namespace gliomaseg::pipeline
