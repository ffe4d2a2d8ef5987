#pragma once

#include "autodiff/tensor.hpp"

namespace gliomaseg::ad {

enum class Padding { Same, Valid };

/// Spatial output extent of a convolution along one axis.
int conv_output_extent(int n, int kernel, int stride, Padding padding);

/// 3D cross-correlation. input (N, X, Y, Z, Cin), kernel (k, k, k, Cin, Cout)
/// with k in {1, 2, 3}, stride in {1, 2}, optional bias (Cout). "Same"
/// padding yields ceil(n / stride) outputs with the extra pad on the high side.
template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride,
                 Padding padding);

/// Stride-2 transposed convolution with a (2, 2, 2, Cin, Cout) kernel; the
/// adjoint of the stride-2, 2^3 valid conv3d with input/output channels swapped.
template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias);

/// Doubles every spatial extent with trilinear interpolation (half-pixel
/// centres, edge clamped).
template <typename T>
Tensor<T> upsample_trilinear2x(const Tensor<T>& input);

}  // namespace gliomaseg::ad
