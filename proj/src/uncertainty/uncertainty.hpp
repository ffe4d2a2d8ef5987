#pragma once

#include <array>
#include <span>
#include <vector>

#include "augment/augment.hpp"
#include "io/volume.hpp"
#include "models/predictor.hpp"

namespace gliomaseg::uncertainty {

/// E(f) = -log sum_k exp(f_k), evaluated as -(max + log sum exp(f - max)).
template <typename T>
T energy(std::span<const T> logits);

/// Per-voxel energy of a logit field.
std::vector<float> energy_field(const io::ChannelVolume& logits);

/// Largest |log max_k softmax(f)_k - (E(f) + max_k f_k)| over voxels. The
/// left side goes through an explicit softmax, the right through energy().
/// `logits` holds `classes` values per voxel, voxel-major.
template <typename T>
T softmax_energy_identity_check(std::span<const T> logits, int classes);

/// -E per voxel (logsumexp of the logits); larger means more confident.
std::vector<float> confidence_map(const io::ChannelVolume& mean_logits);

/// Runs `predict` on the 8 reflections of `input`, maps each output back to
/// the original orientation and averages probabilities and logits. `order`
/// is the sequence in which variants are accumulated.
models::Prediction tta_aggregate(const models::PatchPredictor& predict, const io::ChannelVolume& input,
                                 const std::array<int, augment::kTtaVariantCount>& order = {0, 1, 2, 3, 4, 5, 6, 7});

}  // namespace gliomaseg::uncertainty
