#pragma once

#include <string>

#include "autodiff/tensor.hpp"

namespace gliomaseg::losses {

using ad::Tensor;

/// Loss names from the ablation matrix.
enum class LossKind { Dice, CrossEntropy, DiceCrossEntropy, LogCoshDice };

LossKind parse_loss(const std::string& name);  // "DL", "CE", "DL+CE", "LC"
const char* loss_name(LossKind kind);

inline constexpr double kDiceEpsilon = 1e-6;

/// Soft dice score (2*sum(p*y) + eps) / (sum(p) + sum(y) + eps) per class,
/// sums over batch and space, averaged over the foreground classes: channel 0
/// when there is a single channel, channels 1..K-1 otherwise.
template <typename T>
Tensor<T> soft_dice_score(const Tensor<T>& probs, const Tensor<T>& target, double eps = kDiceEpsilon);

/// 1 - soft_dice_score.
template <typename T>
Tensor<T> dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double eps = kDiceEpsilon);

/// Mean over voxels of -log p_true, probabilities clamped at 1e-12. A single
/// channel is read as a sigmoid output: -(y log p + (1 - y) log(1 - p)).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& target);

/// Elementwise log(cosh(x)), evaluated as |x| + log1p(exp(-2|x|)) - log 2.
template <typename T>
Tensor<T> log_cosh(const Tensor<T>& x);

template <typename T>
Tensor<T> log_cosh_dice(const Tensor<T>& probs, const Tensor<T>& target, double eps = kDiceEpsilon);

template <typename T>
Tensor<T> dice_ce(const Tensor<T>& probs, const Tensor<T>& target, double eps = kDiceEpsilon);

template <typename T>
Tensor<T> compute_loss(LossKind kind, const Tensor<T>& probs, const Tensor<T>& target);

}  // namespace gliomaseg::losses
