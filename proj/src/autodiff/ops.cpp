#include "autodiff/ops.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace gliomaseg::ad {

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::ShapeMismatch,
         std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
}

// Visits every index of `full` together with the matching index of `reduced`,
// where each reduced extent is either 1 or equal to the full extent.
template <typename F>
void for_each_broadcast(const Shape& full, const Shape& reduced, F&& f) {
  const std::size_t rank = full.size();
  std::vector<std::size_t> rstride(rank, 0);
  std::size_t s = 1;
  for (std::size_t a = rank; a-- > 0;) {
    rstride[a] = reduced[a] == 1 ? 0 : s;
    s *= static_cast<std::size_t>(reduced[a]);
  }
  std::vector<int> idx(rank, 0);
  std::size_t j = 0;
  const std::size_t n = numel(full);
  for (std::size_t i = 0; i < n; ++i) {
    f(i, j);
    for (std::size_t a = rank; a-- > 0;) {
      ++idx[a];
      j += rstride[a];
      if (idx[a] < full[a]) break;
      j -= rstride[a] * static_cast<std::size_t>(full[a]);
      idx[a] = 0;
    }
  }
}

template <typename T>
Shape reduced_shape(const Shape& s, const std::vector<int>& axes) {
  Shape r = s;
  for (int a : axes) {
    if (a < 0 || a >= static_cast<int>(s.size())) fail(ErrorCode::ShapeMismatch, "reduce: axis out of range");
    r[static_cast<std::size_t>(a)] = 1;
  }
  return r;
}

template <typename T, typename Fwd, typename Dfdx>
Tensor<T> unary(const Tensor<T>& a, Fwd fwd, Dfdx dfdx) {
  std::vector<T> out(a.size());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return make_result<T>(a.shape(), std::move(out), {a}, [dfdx](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "div");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i] * self.value[i] / pb.value[i];
    }
  });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return unary(a, [](T x) { return -x; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  static constexpr T kFloor = T(1e-12);
  for (T x : a.data()) {
    if (!(std::max(x, kFloor) > T(0))) fail(ErrorCode::DomainError, "log of non-positive or NaN value");
  }
  return unary(
      a, [](T x) { return std::log(std::max(x, kFloor)); },
      [](T x, T) { return x > kFloor ? T(1) / x : T(0); });
}

template <typename T>
Tensor<T> max_const(const Tensor<T>& a, T c) {
  return unary(a, [c](T x) { return x > c ? x : c; }, [c](T x, T) { return x > c ? T(1) : T(0); });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return unary(a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_const(const Tensor<T>& a, T c) {
  return unary(a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a, const std::vector<int>& axes) {
  const Shape rs = reduced_shape<T>(a.shape(), axes);
  std::vector<double> acc(numel(rs), 0.0);
  auto x = a.data();
  for_each_broadcast(a.shape(), rs, [&](std::size_t i, std::size_t j) { acc[j] += static_cast<double>(x[i]); });
  std::vector<T> out(acc.begin(), acc.end());
  return make_result<T>(rs, std::move(out), {a}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for_each_broadcast(p.shape, self.shape, [&](std::size_t i, std::size_t j) { g[i] += self.grad[j]; });
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, const std::vector<int>& axes) {
  const Shape rs = reduced_shape<T>(a.shape(), axes);
  const T inv = T(1) / static_cast<T>(numel(a.shape()) / numel(rs));
  return scale(sum(a, axes), inv);
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += static_cast<double>(v);
  return make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(acc)}, {a}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  return scale(sum_all(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> broadcast_to(const Tensor<T>& a, const Shape& shape) {
  if (a.rank() != static_cast<int>(shape.size())) fail(ErrorCode::ShapeMismatch, "broadcast_to: rank mismatch");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (a.shape()[i] != 1 && a.shape()[i] != shape[i]) {
      fail(ErrorCode::ShapeMismatch,
           "broadcast_to: cannot expand " + shape_string(a.shape()) + " to " + shape_string(shape));
    }
  }
  std::vector<T> out(numel(shape));
  auto x = a.data();
  for_each_broadcast(shape, a.shape(), [&](std::size_t i, std::size_t j) { out[i] = x[j]; });
  return make_result<T>(shape, std::move(out), {a}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for_each_broadcast(self.shape, p.shape, [&](std::size_t i, std::size_t j) { g[j] += self.grad[i]; });
  });
}

template <typename T>
Tensor<T> broadcast_channels(const Tensor<T>& vec, const Tensor<T>& like) {
  const int c = like.shape().back();
  if (static_cast<int>(vec.size()) != c && vec.rank() != like.rank()) {
    fail(ErrorCode::ShapeMismatch, "broadcast_channels: vector " + shape_string(vec.shape()) +
                                       " does not match channels of " + shape_string(like.shape()));
  }
  Tensor<T> v = vec;
  if (vec.rank() != like.rank()) {
    Shape s(like.shape().size(), 1);
    s.back() = c;
    v = reshape(vec, s);
  }
  return broadcast_to(v, like.shape());
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, const Shape& shape) {
  if (numel(shape) != a.size()) {
    fail(ErrorCode::ShapeMismatch, "reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>(shape, std::move(out), {a}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != b.rank() || a.rank() < 1) fail(ErrorCode::ShapeMismatch, "concat_channels: rank mismatch");
  for (int i = 0; i + 1 < a.rank(); ++i) {
    if (a.shape()[i] != b.shape()[i]) {
      fail(ErrorCode::ShapeMismatch,
           "concat_channels: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
  }
  const std::size_t ca = static_cast<std::size_t>(a.shape().back());
  const std::size_t cb = static_cast<std::size_t>(b.shape().back());
  const std::size_t rows = a.size() / ca;
  Shape s = a.shape();
  s.back() = static_cast<int>(ca + cb);
  std::vector<T> out(rows * (ca + cb));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + r * ca, ca, out.begin() + r * (ca + cb));
    std::copy_n(b.data().begin() + r * cb, cb, out.begin() + r * (ca + cb) + ca);
  }
  return make_result<T>(s, std::move(out), {a, b}, [rows, ca, cb](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < ca; ++c) g[r * ca + c] += self.grad[r * (ca + cb) + c];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cb; ++c) g[r * cb + c] += self.grad[r * (ca + cb) + ca + c];
    }
  });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, int begin, int end) {
  const int c = a.shape().back();
  if (begin < 0 || end > c || begin >= end) fail(ErrorCode::ShapeMismatch, "slice_channels: bad range");
  const std::size_t cs = static_cast<std::size_t>(c);
  const std::size_t w = static_cast<std::size_t>(end - begin);
  const std::size_t rows = a.size() / cs;
  Shape s = a.shape();
  s.back() = end - begin;
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.data().begin() + r * cs + begin, w, out.begin() + r * w);
  return make_result<T>(s, std::move(out), {a}, [rows, cs, w, begin](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < w; ++k) g[r * cs + static_cast<std::size_t>(begin) + k] += self.grad[r * w + k];
  });
}

#define GLIOMASEG_INSTANTIATE(T)                                                          \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> div<T>(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> neg<T>(const Tensor<T>&);                                            \
  template Tensor<T> exp<T>(const Tensor<T>&);                                            \
  template Tensor<T> log<T>(const Tensor<T>&);                                            \
  template Tensor<T> max_const<T>(const Tensor<T>&, T);                                   \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                       \
  template Tensor<T> add_const<T>(const Tensor<T>&, T);                                   \
  template Tensor<T> sum<T>(const Tensor<T>&, const std::vector<int>&);                   \
  template Tensor<T> mean<T>(const Tensor<T>&, const std::vector<int>&);                  \
  template Tensor<T> sum_all<T>(const Tensor<T>&);                                        \
  template Tensor<T> mean_all<T>(const Tensor<T>&);                                       \
  template Tensor<T> broadcast_to<T>(const Tensor<T>&, const Shape&);                     \
  template Tensor<T> broadcast_channels<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> reshape<T>(const Tensor<T>&, const Shape&);                          \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, int, int);

GLIOMASEG_INSTANTIATE(float)
GLIOMASEG_INSTANTIATE(double)

#undef GLIOMASEG_INSTANTIATE

}  // namespace gliomaseg::ad
