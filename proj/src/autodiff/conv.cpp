#include "autodiff/conv.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "autodiff/blas.hpp"
#include "common/error.hpp"

namespace gliomaseg::ad {

namespace {

// Upper bound on the im2col scratch, in elements.
constexpr std::size_t kColsBudget = std::size_t{1} << 22;

struct ConvGeom {
  int n = 0;
  std::array<int, 3> in{};
  std::array<int, 3> out{};
  std::array<int, 3> pad{};
  int cin = 0;
  int cout = 0;
  int k = 0;
  int stride = 1;

  std::size_t rows() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(out[0]) * static_cast<std::size_t>(out[1]) *
           static_cast<std::size_t>(out[2]);
  }
  int patch() const { return k * k * k * cin; }
  bool pointwise() const { return k == 1 && stride == 1; }
};

void require_rank5(const Shape& s, const char* what) {
  if (s.size() != 5) fail(ErrorCode::ShapeMismatch, std::string(what) + " must be rank 5, got " + shape_string(s));
}

// Walks the receptive field of output rows [r0, r1). For every (row, tap) the
// callback receives the destination offset inside the row-major column block
// and the flat input voxel offset (or npos for zero padding).
template <typename F>
void for_each_tap(const ConvGeom& g, std::size_t r0, std::size_t r1, F&& f) {
  const std::size_t patch = static_cast<std::size_t>(g.patch());
  const std::size_t cin = static_cast<std::size_t>(g.cin);
  for (std::size_t r = r0; r < r1; ++r) {
    std::size_t t = r;
    const int oz = static_cast<int>(t % static_cast<std::size_t>(g.out[2]));
    t /= static_cast<std::size_t>(g.out[2]);
    const int oy = static_cast<int>(t % static_cast<std::size_t>(g.out[1]));
    t /= static_cast<std::size_t>(g.out[1]);
    const int ox = static_cast<int>(t % static_cast<std::size_t>(g.out[0]));
    const std::size_t b = t / static_cast<std::size_t>(g.out[0]);
    std::size_t dst = (r - r0) * patch;
    for (int a = 0; a < g.k; ++a) {
      const int ix = ox * g.stride - g.pad[0] + a;
      for (int bb = 0; bb < g.k; ++bb) {
        const int iy = oy * g.stride - g.pad[1] + bb;
        for (int c = 0; c < g.k; ++c, dst += cin) {
          const int iz = oz * g.stride - g.pad[2] + c;
          if (ix < 0 || iy < 0 || iz < 0 || ix >= g.in[0] || iy >= g.in[1] || iz >= g.in[2]) {
            f(dst, static_cast<std::size_t>(-1));
            continue;
          }
          const std::size_t src =
              (((b * static_cast<std::size_t>(g.in[0]) + static_cast<std::size_t>(ix)) * static_cast<std::size_t>(g.in[1]) +
                static_cast<std::size_t>(iy)) *
                   static_cast<std::size_t>(g.in[2]) +
               static_cast<std::size_t>(iz)) *
              cin;
          f(dst, src);
        }
      }
    }
  }
}

template <typename T>
void im2col(const T* x, const ConvGeom& g, std::size_t r0, std::size_t r1, T* cols) {
  const std::size_t cin = static_cast<std::size_t>(g.cin);
  const std::size_t patch = static_cast<std::size_t>(g.patch());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(r1 - r0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::size_t r = r0 + static_cast<std::size_t>(i);
    T* row = cols + static_cast<std::size_t>(i) * patch;
    for_each_tap(g, r, r + 1, [&](std::size_t dst, std::size_t src) {
      if (src == static_cast<std::size_t>(-1)) {
        std::fill_n(row + dst, cin, T(0));
      } else {
        std::copy_n(x + src, cin, row + dst);
      }
    });
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, std::size_t r0, std::size_t r1, T* gx) {
  const std::size_t cin = static_cast<std::size_t>(g.cin);
  for_each_tap(g, r0, r1, [&](std::size_t dst, std::size_t src) {
    if (src == static_cast<std::size_t>(-1)) return;
    for (std::size_t i = 0; i < cin; ++i) gx[src + i] += cols[dst + i];
  });
}

std::size_t chunk_rows(const ConvGeom& g) {
  return std::max<std::size_t>(1, std::min(g.rows(), kColsBudget / static_cast<std::size_t>(g.patch())));
}

}  // namespace

int conv_output_extent(int n, int kernel, int stride, Padding padding) {
  if (padding == Padding::Same) return (n + stride - 1) / stride;
  return n >= kernel ? (n - kernel) / stride + 1 : 0;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, int stride,
                 Padding padding) {
  require_rank5(input.shape(), "conv3d input");
  require_rank5(kernel.shape(), "conv3d kernel");
  const Shape& ks = kernel.shape();
  const int k = ks[0];
  if (k < 1 || k > 3 || ks[1] != k || ks[2] != k) {
    fail(ErrorCode::UnsupportedKernel, "conv3d kernel must be k^3 with k in {1,2,3}, got " + shape_string(ks));
  }
  if (stride != 1 && stride != 2) fail(ErrorCode::UnsupportedKernel, "conv3d stride must be 1 or 2");
  if (ks[3] != input.shape()[4]) {
    fail(ErrorCode::ShapeMismatch, "conv3d: input channels " + std::to_string(input.shape()[4]) +
                                       " vs kernel " + shape_string(ks));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.size() != static_cast<std::size_t>(ks[4]))) {
    fail(ErrorCode::ShapeMismatch, "conv3d: bias length must equal output channels");
  }

  ConvGeom g;
  g.n = input.shape()[0];
  g.cin = ks[3];
  g.cout = ks[4];
  g.k = k;
  g.stride = stride;
  for (int a = 0; a < 3; ++a) {
    g.in[a] = input.shape()[static_cast<std::size_t>(a + 1)];
    g.out[a] = conv_output_extent(g.in[a], k, stride, padding);
    if (g.out[a] < 1) fail(ErrorCode::ShapeMismatch, "conv3d: input smaller than kernel");
    g.pad[a] = padding == Padding::Same ? std::max(0, (g.out[a] - 1) * stride + k - g.in[a]) / 2 : 0;
  }

  const std::size_t rows = g.rows();
  const int patch = g.patch();
  std::vector<T> out(rows * static_cast<std::size_t>(g.cout));
  const T* x = input.data().data();
  const T* w = kernel.data().data();
  if (g.pointwise()) {
    gemm<T>(false, false, static_cast<int>(rows), g.cout, patch, T(1), x, patch, w, g.cout, T(0), out.data(), g.cout);
  } else {
    const std::size_t chunk = chunk_rows(g);
    std::vector<T> cols(chunk * static_cast<std::size_t>(patch));
    for (std::size_t r0 = 0; r0 < rows; r0 += chunk) {
      const std::size_t r1 = std::min(rows, r0 + chunk);
      im2col(x, g, r0, r1, cols.data());
      gemm<T>(false, false, static_cast<int>(r1 - r0), g.cout, patch, T(1), cols.data(), patch, w, g.cout, T(0),
              out.data() + r0 * static_cast<std::size_t>(g.cout), g.cout);
    }
  }
  if (has_bias) {
    const T* bv = bias.data().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (int c = 0; c < g.cout; ++c) out[r * static_cast<std::size_t>(g.cout) + static_cast<std::size_t>(c)] += bv[c];
  }

  Shape os{g.n, g.out[0], g.out[1], g.out[2], g.cout};
  std::vector<Tensor<T>> parents{input, kernel};
  if (has_bias) parents.push_back(bias);
  return make_result<T>(os, std::move(out), std::move(parents), [g, has_bias](Node<T>& self) {
    Node<T>& px = *self.parents[0];
    Node<T>& pw = *self.parents[1];
    const std::size_t rows = g.rows();
    const int patch = g.patch();
    const std::size_t cout = static_cast<std::size_t>(g.cout);
    const T* gout = self.grad.data();
    if (has_bias && self.parents[2]->requires_grad) {
      auto& gb = self.parents[2]->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cout; ++c) gb[c] += gout[r * cout + c];
    }
    if (!px.requires_grad && !pw.requires_grad) return;
    const T* x = px.value.data();
    const T* w = pw.value.data();
    T* gw = pw.requires_grad ? pw.grad_buffer().data() : nullptr;
    T* gx = px.requires_grad ? px.grad_buffer().data() : nullptr;
    if (g.pointwise()) {
      if (gw) gemm<T>(true, false, patch, g.cout, static_cast<int>(rows), T(1), x, patch, gout, g.cout, T(1), gw, g.cout);
      if (gx) gemm<T>(false, true, static_cast<int>(rows), patch, g.cout, T(1), gout, g.cout, w, g.cout, T(1), gx, patch);
      return;
    }
    const std::size_t chunk = chunk_rows(g);
    std::vector<T> cols(chunk * static_cast<std::size_t>(patch));
    for (std::size_t r0 = 0; r0 < rows; r0 += chunk) {
      const std::size_t r1 = std::min(rows, r0 + chunk);
      const int m = static_cast<int>(r1 - r0);
      const T* gchunk = gout + r0 * cout;
      if (gw) {
        im2col(x, g, r0, r1, cols.data());
        gemm<T>(true, false, patch, g.cout, m, T(1), cols.data(), patch, gchunk, g.cout, T(1), gw, g.cout);
      }
      if (gx) {
        gemm<T>(false, true, m, patch, g.cout, T(1), gchunk, g.cout, w, g.cout, T(0), cols.data(), patch);
        col2im_add(cols.data(), g, r0, r1, gx);
      }
    }
  });
}

template <typename T>
Tensor<T> conv_transpose3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require_rank5(input.shape(), "conv_transpose3d input");
  require_rank5(kernel.shape(), "conv_transpose3d kernel");
  const Shape& ks = kernel.shape();
  if (ks[0] != 2 || ks[1] != 2 || ks[2] != 2) {
    fail(ErrorCode::ShapeMismatch, "conv_transpose3d kernel must be 2x2x2, got " + shape_string(ks));
  }
  const Shape& is = input.shape();
  if (ks[3] != is[4]) fail(ErrorCode::ShapeMismatch, "conv_transpose3d: input channels differ from kernel");
  const bool has_bias = bias.defined();
  if (has_bias && bias.size() != static_cast<std::size_t>(ks[4])) {
    fail(ErrorCode::ShapeMismatch, "conv_transpose3d: bias length must equal output channels");
  }
  const int cin = ks[3];
  const int cout = ks[4];
  const int wide = 8 * cout;
  const std::size_t rows = numel(is) / static_cast<std::size_t>(cin);

  // Kernel regrouped as (Cin, tap * Cout) so one GEMM yields all 8 taps.
  const auto regroup = [cin, cout](const T* w, T* wcat) {
    for (int tap = 0; tap < 8; ++tap)
      for (int ci = 0; ci < cin; ++ci)
        for (int co = 0; co < cout; ++co)
          wcat[static_cast<std::size_t>(ci) * (8 * cout) + static_cast<std::size_t>(tap * cout + co)] =
              w[(static_cast<std::size_t>(tap) * cin + ci) * cout + co];
  };
  std::vector<T> wcat(static_cast<std::size_t>(cin) * static_cast<std::size_t>(wide));
  regroup(kernel.data().data(), wcat.data());
  std::vector<T> y(rows * static_cast<std::size_t>(wide));
  gemm<T>(false, false, static_cast<int>(rows), wide, cin, T(1), input.data().data(), cin, wcat.data(), wide, T(0),
          y.data(), wide);

  const int X = is[1], Y = is[2], Z = is[3];
  Shape os{is[0], 2 * X, 2 * Y, 2 * Z, cout};
  // Maps (input row, tap) to the flat offset of its output voxel.
  const auto out_offset = [X, Y, Z, cout](std::size_t r, int tap) {
    std::size_t t = r;
    const int z = static_cast<int>(t % static_cast<std::size_t>(Z));
    t /= static_cast<std::size_t>(Z);
    const int yy = static_cast<int>(t % static_cast<std::size_t>(Y));
    t /= static_cast<std::size_t>(Y);
    const int x = static_cast<int>(t % static_cast<std::size_t>(X));
    const std::size_t b = t / static_cast<std::size_t>(X);
    const int ox = 2 * x + (tap >> 2), oy = 2 * yy + ((tap >> 1) & 1), oz = 2 * z + (tap & 1);
    return (((b * static_cast<std::size_t>(2 * X) + static_cast<std::size_t>(ox)) * static_cast<std::size_t>(2 * Y) +
             static_cast<std::size_t>(oy)) *
                static_cast<std::size_t>(2 * Z) +
            static_cast<std::size_t>(oz)) *
           static_cast<std::size_t>(cout);
  };

  std::vector<T> out(numel(os));
  const T* bv = has_bias ? bias.data().data() : nullptr;
  for (std::size_t r = 0; r < rows; ++r) {
    for (int tap = 0; tap < 8; ++tap) {
      const std::size_t o = out_offset(r, tap);
      const T* src = y.data() + r * static_cast<std::size_t>(wide) + static_cast<std::size_t>(tap * cout);
      for (int co = 0; co < cout; ++co) out[o + static_cast<std::size_t>(co)] = src[co] + (bv ? bv[co] : T(0));
    }
  }

  std::vector<Tensor<T>> parents{input, kernel};
  if (has_bias) parents.push_back(bias);
  return make_result<T>(
      os, std::move(out), std::move(parents),
      [rows, cin, cout, wide, has_bias, out_offset, wcat = std::move(wcat)](Node<T>& self) {
        Node<T>& px = *self.parents[0];
        Node<T>& pw = *self.parents[1];
        std::vector<T> gy(rows * static_cast<std::size_t>(wide));
        for (std::size_t r = 0; r < rows; ++r)
          for (int tap = 0; tap < 8; ++tap)
            std::copy_n(self.grad.data() + out_offset(r, tap), cout,
                        gy.data() + r * static_cast<std::size_t>(wide) + static_cast<std::size_t>(tap * cout));
        if (has_bias && self.parents[2]->requires_grad) {
          auto& gb = self.parents[2]->grad_buffer();
          const std::size_t total = self.grad.size() / static_cast<std::size_t>(cout);
          for (std::size_t v = 0; v < total; ++v)
            for (int co = 0; co < cout; ++co) gb[static_cast<std::size_t>(co)] += self.grad[v * cout + co];
        }
        if (px.requires_grad) {
          gemm<T>(false, true, static_cast<int>(rows), cin, wide, T(1), gy.data(), wide, wcat.data(), wide, T(1),
                  px.grad_buffer().data(), cin);
        }
        if (pw.requires_grad) {
          std::vector<T> gcat(static_cast<std::size_t>(cin) * static_cast<std::size_t>(wide));
          gemm<T>(true, false, cin, wide, static_cast<int>(rows), T(1), px.value.data(), cin, gy.data(), wide, T(0),
                  gcat.data(), wide);
          auto& gw = pw.grad_buffer();
          for (int tap = 0; tap < 8; ++tap)
            for (int ci = 0; ci < cin; ++ci)
              for (int co = 0; co < cout; ++co)
                gw[(static_cast<std::size_t>(tap) * cin + ci) * cout + co] +=
                    gcat[static_cast<std::size_t>(ci) * wide + static_cast<std::size_t>(tap * cout + co)];
        }
      });
}

namespace {

struct LinearTap {
  int i0, i1;
  double w0, w1;
};

std::vector<LinearTap> upsample_taps(int n) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(2 * n));
  for (int o = 0; o < 2 * n; ++o) {
    const double src = std::clamp((o + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(n - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, n - 1);
    const double f = src - i0;
    taps[static_cast<std::size_t>(o)] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

// Applies the 1D interpolation along `axis` (1..3) of a rank-5 array.
// Adjoint mode scatters from the upsampled grid back to the source grid.
template <typename T>
void resample_axis(const std::vector<T>& src, const Shape& src_shape, std::vector<T>& dst, const Shape& dst_shape,
                   int axis, const std::vector<LinearTap>& taps, bool adjoint) {
  std::size_t outer = 1;
  for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(src_shape[static_cast<std::size_t>(a)]);
  std::size_t inner = 1;
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < 5; ++a) inner *= static_cast<std::size_t>(src_shape[a]);
  const std::size_t ns = static_cast<std::size_t>(src_shape[static_cast<std::size_t>(axis)]);
  const std::size_t nd = static_cast<std::size_t>(dst_shape[static_cast<std::size_t>(axis)]);
  std::fill(dst.begin(), dst.end(), T(0));
  for (std::size_t o = 0; o < outer; ++o) {
    if (!adjoint) {
      for (std::size_t j = 0; j < nd; ++j) {
        const auto& t = taps[j];
        const T* a0 = src.data() + (o * ns + static_cast<std::size_t>(t.i0)) * inner;
        const T* a1 = src.data() + (o * ns + static_cast<std::size_t>(t.i1)) * inner;
        T* d = dst.data() + (o * nd + j) * inner;
        for (std::size_t i = 0; i < inner; ++i) d[i] = static_cast<T>(t.w0) * a0[i] + static_cast<T>(t.w1) * a1[i];
      }
    } else {
      // src is the upsampled gradient (length taps), dst the coarse grid.
      for (std::size_t j = 0; j < ns; ++j) {
        const auto& t = taps[j];
        const T* s = src.data() + (o * ns + j) * inner;
        T* d0 = dst.data() + (o * nd + static_cast<std::size_t>(t.i0)) * inner;
        T* d1 = dst.data() + (o * nd + static_cast<std::size_t>(t.i1)) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          d0[i] += static_cast<T>(t.w0) * s[i];
          d1[i] += static_cast<T>(t.w1) * s[i];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> upsample_trilinear2x(const Tensor<T>& input) {
  require_rank5(input.shape(), "upsample input");
  const Shape s0 = input.shape();
  Shape s1 = s0, s2 = s0, s3 = s0;
  s1[1] *= 2;
  s2 = s1;
  s2[2] *= 2;
  s3 = s2;
  s3[3] *= 2;
  const auto tx = upsample_taps(s0[1]);
  const auto ty = upsample_taps(s0[2]);
  const auto tz = upsample_taps(s0[3]);
  std::vector<T> a(input.data().begin(), input.data().end());
  std::vector<T> b(numel(s1));
  resample_axis(a, s0, b, s1, 1, tx, false);
  std::vector<T> c(numel(s2));
  resample_axis(b, s1, c, s2, 2, ty, false);
  std::vector<T> d(numel(s3));
  resample_axis(c, s2, d, s3, 3, tz, false);
  return make_result<T>(s3, std::move(d), {input}, [s0, s1, s2, s3, tx, ty, tz](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    std::vector<T> g2(numel(s2));
    resample_axis(self.grad, s3, g2, s2, 3, tz, true);
    std::vector<T> g1(numel(s1));
    resample_axis(g2, s2, g1, s1, 2, ty, true);
    std::vector<T> g0(numel(s0));
    resample_axis(g1, s1, g0, s0, 1, tx, true);
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0[i];
  });
}

#define GLIOMASEG_INSTANTIATE(T)                                                                             \
  template Tensor<T> conv3d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, Padding);         \
  template Tensor<T> conv_transpose3d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> upsample_trilinear2x<T>(const Tensor<T>&);

GLIOMASEG_INSTANTIATE(float)
GLIOMASEG_INSTANTIATE(double)

#undef GLIOMASEG_INSTANTIATE

}  // namespace gliomaseg::ad
