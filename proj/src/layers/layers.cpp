#include "layers/layers.hpp"

#include <cmath>

#include "autodiff/conv.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace gliomaseg::layers {

using ad::Node;
using ad::Shape;

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T epsilon) {
  if (x.rank() != 5) fail(ErrorCode::ShapeMismatch, "instance_norm expects (N, X, Y, Z, C)");
  const std::size_t n = static_cast<std::size_t>(x.dim(0));
  const std::size_t c = static_cast<std::size_t>(x.dim(4));
  const std::size_t s = static_cast<std::size_t>(x.dim(1)) * static_cast<std::size_t>(x.dim(2)) *
                        static_cast<std::size_t>(x.dim(3));
  if (s < 2) fail(ErrorCode::DegenerateSpatial, "instance_norm needs at least 2 spatial voxels");

  auto xv = x.data();
  std::vector<T> out(x.size());
  std::vector<T> inv_std(n * c);
  std::vector<double> mu(c), var(c);
  for (std::size_t b = 0; b < n; ++b) {
    const T* base = xv.data() + b * s * c;
    std::fill(mu.begin(), mu.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (std::size_t v = 0; v < s; ++v)
      for (std::size_t k = 0; k < c; ++k) mu[k] += static_cast<double>(base[v * c + k]);
    for (std::size_t k = 0; k < c; ++k) mu[k] /= static_cast<double>(s);
    for (std::size_t v = 0; v < s; ++v) {
      for (std::size_t k = 0; k < c; ++k) {
        const double d = static_cast<double>(base[v * c + k]) - mu[k];
        var[k] += d * d;
      }
    }
    for (std::size_t k = 0; k < c; ++k) {
      inv_std[b * c + k] = static_cast<T>(1.0 / std::sqrt(var[k] / static_cast<double>(s) + static_cast<double>(epsilon)));
    }
    T* o = out.data() + b * s * c;
    for (std::size_t v = 0; v < s; ++v)
      for (std::size_t k = 0; k < c; ++k)
        o[v * c + k] = static_cast<T>((static_cast<double>(base[v * c + k]) - mu[k]) * inv_std[b * c + k]);
  }

  return ad::make_result<T>(x.shape(), std::move(out), {x}, [n, c, s, inv_std](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gx = p.grad_buffer();
    std::vector<double> mg(c), mgy(c);
    for (std::size_t b = 0; b < n; ++b) {
      const T* g = self.grad.data() + b * s * c;
      const T* y = self.value.data() + b * s * c;
      std::fill(mg.begin(), mg.end(), 0.0);
      std::fill(mgy.begin(), mgy.end(), 0.0);
      for (std::size_t v = 0; v < s; ++v) {
        for (std::size_t k = 0; k < c; ++k) {
          mg[k] += static_cast<double>(g[v * c + k]);
          mgy[k] += static_cast<double>(g[v * c + k]) * static_cast<double>(y[v * c + k]);
        }
      }
      for (std::size_t k = 0; k < c; ++k) {
        mg[k] /= static_cast<double>(s);
        mgy[k] /= static_cast<double>(s);
      }
      T* dx = gx.data() + b * s * c;
      for (std::size_t v = 0; v < s; ++v) {
        for (std::size_t k = 0; k < c; ++k) {
          const std::size_t i = v * c + k;
          dx[i] += static_cast<T>(static_cast<double>(inv_std[b * c + k]) *
                                  (static_cast<double>(g[i]) - mg[k] - static_cast<double>(y[i]) * mgy[k]));
        }
      }
    }
  });
}

template <typename T>
Tensor<T> elu(const Tensor<T>& x, T alpha) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : alpha * std::expm1(xv[i]);
  return ad::make_result<T>(x.shape(), std::move(out), {x}, [alpha](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * (p.value[i] > T(0) ? T(1) : self.value[i] + alpha);
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return ad::max_const(x, T(0));
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = xv[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return ad::make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i] * (T(1) - self.value[i]);
  });
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
  const std::size_t c = static_cast<std::size_t>(x.shape().back());
  const std::size_t rows = x.size() / c;
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    T* o = out.data() + r * c;
    T mx = in[0];
    for (std::size_t k = 1; k < c; ++k) mx = std::max(mx, in[k]);
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      o[k] = std::exp(in[k] - mx);
      z += static_cast<double>(o[k]);
    }
    const T inv = static_cast<T>(1.0 / z);
    for (std::size_t k = 0; k < c; ++k) o[k] *= inv;
  }
  return ad::make_result<T>(x.shape(), std::move(out), {x}, [rows, c](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * c;
      const T* gy = self.grad.data() + r * c;
      double dot = 0.0;
      for (std::size_t k = 0; k < c; ++k) dot += static_cast<double>(gy[k]) * static_cast<double>(y[k]);
      for (std::size_t k = 0; k < c; ++k) g[r * c + k] += y[k] * (gy[k] - static_cast<T>(dot));
    }
  });
}

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const Tensor<T>& channel_weights) {
  if (x.rank() != 5) fail(ErrorCode::ShapeMismatch, "channel_attention expects (N, X, Y, Z, C)");
  const int c = x.dim(4);
  if (static_cast<int>(channel_weights.size()) != c) {
    fail(ErrorCode::ShapeMismatch, "channel_attention: W_c has " + std::to_string(channel_weights.size()) +
                                       " entries for " + std::to_string(c) + " channels");
  }
  const Tensor<T> gap = ad::mean(x, {1, 2, 3});
  const Tensor<T> w = ad::broadcast_channels(channel_weights, gap);
  const Tensor<T> alpha = sigmoid(ad::mul(gap, w));
  return ad::mul(x, ad::broadcast_to(alpha, x.shape()));
}

template <typename T>
Tensor<T> attention_coefficients(const Tensor<T>& x, const Tensor<T>& g, const AttentionGateParams<T>& p) {
  const Tensor<T> theta = ad::conv3d(x, p.w_x, Tensor<T>(), 2, ad::Padding::Same);
  const Tensor<T> phi = ad::conv3d(g, p.w_g, Tensor<T>(), 1, ad::Padding::Same);
  if (theta.shape() != phi.shape()) {
    fail(ErrorCode::ShapeMismatch, "attention_gate: W_x x " + ad::shape_string(theta.shape()) + " vs W_g g " +
                                       ad::shape_string(phi.shape()));
  }
  const Tensor<T> f = relu(ad::add(theta, phi));
  return sigmoid(ad::conv3d(f, p.w_psi, Tensor<T>(), 1, ad::Padding::Same));
}

template <typename T>
Tensor<T> attention_gate(const Tensor<T>& x, const Tensor<T>& g, const AttentionGateParams<T>& p) {
  const Tensor<T> alpha = ad::upsample_trilinear2x(attention_coefficients(x, g, p));
  for (int a = 0; a < 4; ++a) {
    if (alpha.dim(static_cast<std::size_t>(a)) != x.dim(static_cast<std::size_t>(a))) {
      fail(ErrorCode::ShapeMismatch, "attention_gate: gating grid is not half of the skip grid");
    }
  }
  return ad::mul(x, ad::broadcast_to(alpha, x.shape()));
}

template <typename T>
Tensor<T> conv_block1(const Tensor<T>& x, const ConvBlockParams<T>& p) {
  Tensor<T> h = instance_norm(elu(ad::conv3d(x, p.w1, p.b1, 1, ad::Padding::Same)));
  return instance_norm(elu(ad::conv3d(h, p.w2, p.b2, 1, ad::Padding::Same)));
}

template <typename T>
Tensor<T> conv_block2(const Tensor<T>& x, const ConvBlock2Params<T>& p) {
  Tensor<T> h = instance_norm(relu(ad::conv3d(x, p.convs.w1, p.convs.b1, 1, ad::Padding::Same)));
  h = instance_norm(relu(ad::conv3d(h, p.convs.w2, p.convs.b2, 1, ad::Padding::Same)));
  return instance_norm(channel_attention(h, p.w_c));
}

#define GLIOMASEG_INSTANTIATE(T)                                                                          \
  template Tensor<T> instance_norm<T>(const Tensor<T>&, T);                                               \
  template Tensor<T> elu<T>(const Tensor<T>&, T);                                                         \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                           \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                        \
  template Tensor<T> softmax_channels<T>(const Tensor<T>&);                                               \
  template Tensor<T> channel_attention<T>(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> attention_coefficients<T>(const Tensor<T>&, const Tensor<T>&,                        \
                                               const AttentionGateParams<T>&);                            \
  template Tensor<T> attention_gate<T>(const Tensor<T>&, const Tensor<T>&, const AttentionGateParams<T>&); \
  template Tensor<T> conv_block1<T>(const Tensor<T>&, const ConvBlockParams<T>&);                         \
  template Tensor<T> conv_block2<T>(const Tensor<T>&, const ConvBlock2Params<T>&);

GLIOMASEG_INSTANTIATE(float)
GLIOMASEG_INSTANTIATE(double)

#undef GLIOMASEG_INSTANTIATE

}  // namespace gliomaseg::layers
