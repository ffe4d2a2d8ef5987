#pragma once

#include <functional>
#include <vector>

#include "autodiff/tensor.hpp"
#include "io/volume.hpp"
#include "models/unet.hpp"

namespace gliomaseg::models {

/// Whole-grid network output: probabilities and the head logits they came from.
struct Prediction {
  io::ChannelVolume probs;
  io::ChannelVolume logits;
};

/// Maps one input grid (channels = model inputs) to a prediction on the same grid.
using PatchPredictor = std::function<Prediction(const io::ChannelVolume&)>;

/// (1, X, Y, Z, C) tensor from a channel-major volume, and back.
ad::Tensor<float> to_tensor(const io::ChannelVolume& v);
ad::Tensor<float> to_tensor(const std::vector<const io::ChannelVolume*>& batch);
io::ChannelVolume from_tensor(const ad::Tensor<float>& t, int item = 0);

/// Single forward pass of `model` with its current parameters.
Prediction predict_grid(const UNet& model, const io::ChannelVolume& input);

/// Wraps predict_grid.
PatchPredictor model_predictor(const UNet& model);

struct PatchSpec {
  io::Dims3 patch{48, 48, 128};
  io::Dims3 overlap{0, 0, 0};
};

/// Start offsets along one axis: stride patch - overlap, the last window
/// flush with the far edge.
std::vector<int> window_starts(int extent, int patch, int overlap);

/// Tiles `input` with patches, averaging overlapping outputs with uniform
/// weights. PatchLargerThanVolume when any patch extent exceeds the grid.
Prediction sliding_window_predict(const PatchPredictor& predict, const io::ChannelVolume& input,
                                  const PatchSpec& spec);

/// Copies a sub-box of a channel volume.
io::ChannelVolume extract_patch(const io::ChannelVolume& v, const io::Dims3& origin, const io::Dims3& size);

}  // namespace gliomaseg::models
