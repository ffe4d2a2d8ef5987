#pragma once

#include <vector>

#include "autodiff/tensor.hpp"

namespace gliomaseg::ad {

// Elementwise (identical shapes).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> neg(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
/// Natural log of max(a, 1e-12).
template <typename T> Tensor<T> log(const Tensor<T>& a);
template <typename T> Tensor<T> max_const(const Tensor<T>& a, T c);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_const(const Tensor<T>& a, T c);

// Reductions keep reduced axes as extent 1.
template <typename T> Tensor<T> sum(const Tensor<T>& a, const std::vector<int>& axes);
template <typename T> Tensor<T> mean(const Tensor<T>& a, const std::vector<int>& axes);
/// Sum / mean over every element, shape {1}.
template <typename T> Tensor<T> sum_all(const Tensor<T>& a);
template <typename T> Tensor<T> mean_all(const Tensor<T>& a);

/// Expands extents of 1 to `shape`; ranks must match.
template <typename T> Tensor<T> broadcast_to(const Tensor<T>& a, const Shape& shape);
/// Repeats a per-channel vector (shape {C} or rank-matching with unit extents)
/// over every position of `like`.
template <typename T> Tensor<T> broadcast_channels(const Tensor<T>& vec, const Tensor<T>& like);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, const Shape& shape);
/// Concatenates along the last (channel) axis.
template <typename T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Channels [begin, end) of the last axis.
template <typename T> Tensor<T> slice_channels(const Tensor<T>& a, int begin, int end);

}  // namespace gliomaseg::ad
