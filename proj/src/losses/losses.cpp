#include "losses/losses.hpp"

#include <cmath>

#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace gliomaseg::losses {

using ad::Node;

LossKind parse_loss(const std::string& name) {
  if (name == "DL") return LossKind::Dice;
  if (name == "CE") return LossKind::CrossEntropy;
  if (name == "DL+CE") return LossKind::DiceCrossEntropy;
  if (name == "LC") return LossKind::LogCoshDice;
  fail(ErrorCode::ConfigError, "unknown loss '" + name + "' (expected DL, CE, DL+CE or LC)");
}

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::Dice: return "DL";
    case LossKind::CrossEntropy: return "CE";
    case LossKind::DiceCrossEntropy: return "DL+CE";
    case LossKind::LogCoshDice: return "LC";
  }
  return "?";
}

namespace {

template <typename T>
void require_same(const Tensor<T>& probs, const Tensor<T>& target, const char* what) {
  if (probs.shape() != target.shape()) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": probabilities " + ad::shape_string(probs.shape()) +
                                       " vs target " + ad::shape_string(target.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> soft_dice_score(const Tensor<T>& probs, const Tensor<T>& target, double eps) {
  require_same(probs, target, "dice");
  const int k = probs.shape().back();
  std::vector<int> axes;
  for (int a = 0; a + 1 < probs.rank(); ++a) axes.push_back(a);
  const int first = k == 1 ? 0 : 1;
  Tensor<T> p = ad::slice_channels(probs, first, k);
  Tensor<T> y = ad::slice_channels(target, first, k);
  Tensor<T> inter = ad::sum(ad::mul(p, y), axes);
  Tensor<T> denom = ad::add_const(ad::add(ad::sum(p, axes), ad::sum(y, axes)), static_cast<T>(eps));
  Tensor<T> score = ad::div(ad::add_const(ad::scale(inter, T(2)), static_cast<T>(eps)), denom);
  return ad::mean_all(score);
}

template <typename T>
Tensor<T> dice_loss(const Tensor<T>& probs, const Tensor<T>& target, double eps) {
  return ad::add_const(ad::neg(soft_dice_score(probs, target, eps)), T(1));
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& target) {
  require_same(probs, target, "cross_entropy");
  const int k = probs.shape().back();
  const T voxels = static_cast<T>(probs.size() / static_cast<std::size_t>(k));
  Tensor<T> ll = ad::sum_all(ad::mul(target, ad::log(probs)));
  if (k == 1) {
    Tensor<T> q = ad::add_const(ad::neg(probs), T(1));
    Tensor<T> z = ad::add_const(ad::neg(target), T(1));
    ll = ad::add(ll, ad::sum_all(ad::mul(z, ad::log(q))));
  }
  return ad::scale(ll, T(-1) / voxels);
}

template <typename T>
Tensor<T> log_cosh(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = std::abs(static_cast<double>(xv[i]));
    out[i] = static_cast<T>(a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0));
  }
  return ad::make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * std::tanh(p.value[i]);
  });
}

template <typename T>
Tensor<T> log_cosh_dice(const Tensor<T>& probs, const Tensor<T>& target, double eps) {
  return log_cosh(dice_loss(probs, target, eps));
}

template <typename T>
Tensor<T> dice_ce(const Tensor<T>& probs, const Tensor<T>& target, double eps) {
  return ad::add(dice_loss(probs, target, eps), cross_entropy(probs, target));
}

template <typename T>
Tensor<T> compute_loss(LossKind kind, const Tensor<T>& probs, const Tensor<T>& target) {
  switch (kind) {
    case LossKind::Dice: return dice_loss(probs, target);
    case LossKind::CrossEntropy: return cross_entropy(probs, target);
    case LossKind::DiceCrossEntropy: return dice_ce(probs, target);
    case LossKind::LogCoshDice: return log_cosh_dice(probs, target);
  }
  fail(ErrorCode::ConfigError, "unhandled loss kind");
}

#define GLIOMASEG_INSTANTIATE(T)                                                          \
  template Tensor<T> soft_dice_score<T>(const Tensor<T>&, const Tensor<T>&, double);      \
  template Tensor<T> dice_loss<T>(const Tensor<T>&, const Tensor<T>&, double);            \
  template Tensor<T> cross_entropy<T>(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> log_cosh<T>(const Tensor<T>&);                                       \
  template Tensor<T> log_cosh_dice<T>(const Tensor<T>&, const Tensor<T>&, double);        \
  template Tensor<T> dice_ce<T>(const Tensor<T>&, const Tensor<T>&, double);              \
  template Tensor<T> compute_loss<T>(LossKind, const Tensor<T>&, const Tensor<T>&);

GLIOMASEG_INSTANTIATE(float)
GLIOMASEG_INSTANTIATE(double)

#undef GLIOMASEG_INSTANTIATE

}  // namespace gliomaseg::losses
