#pragma once

#include "autodiff/tensor.hpp"

namespace gliomaseg::layers {

using ad::Tensor;

/// Per-instance, per-channel standardization over the spatial axes of an
/// (N, X, Y, Z, C) tensor: (x - mean) / sqrt(var + epsilon).
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T epsilon = T(1e-5));

template <typename T>
Tensor<T> elu(const Tensor<T>& x, T alpha = T(1));
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// Softmax over the last axis, max-subtracted.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x);

/// alpha_c = sigmoid(GAP_c(x) * w_c); returns x scaled per (instance, channel).
template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const Tensor<T>& channel_weights);

template <typename T>
struct AttentionGateParams {
  Tensor<T> w_x;    // (1, 1, 1, F_x, F), applied with stride 2
  Tensor<T> w_g;    // (1, 1, 1, F_g, F)
  Tensor<T> w_psi;  // (1, 1, 1, F, 1)
};

/// Attention coefficients on the coarse grid, before upsampling.
template <typename T>
Tensor<T> attention_coefficients(const Tensor<T>& x, const Tensor<T>& g, const AttentionGateParams<T>& p);

/// alpha = sigmoid(W_psi * relu(W_x * x + W_g * g)), upsampled trilinearly to
/// x's grid and multiplied into every channel of x. g has half x's spatial
/// extent.
template <typename T>
Tensor<T> attention_gate(const Tensor<T>& x, const Tensor<T>& g, const AttentionGateParams<T>& p);

template <typename T>
struct ConvBlockParams {
  Tensor<T> w1, b1;  // (3, 3, 3, Cin, Cout), (Cout)
  Tensor<T> w2, b2;  // (3, 3, 3, Cout, Cout), (Cout)
};

template <typename T>
struct ConvBlock2Params {
  ConvBlockParams<T> convs;
  Tensor<T> w_c;  // (Cout)
};

/// conv -> ELU -> I-Norm -> conv -> ELU -> I-Norm
template <typename T>
Tensor<T> conv_block1(const Tensor<T>& x, const ConvBlockParams<T>& p);

/// conv -> ReLU -> I-Norm -> conv -> ReLU -> I-Norm -> channel attention -> I-Norm
template <typename T>
Tensor<T> conv_block2(const Tensor<T>& x, const ConvBlock2Params<T>& p);

}  // namespace gliomaseg::layers
