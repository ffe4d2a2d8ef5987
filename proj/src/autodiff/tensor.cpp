#include "autodiff/tensor.hpp"

#include <sstream>

#include "common/error.hpp"

namespace gliomaseg::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) fail(ErrorCode::ShapeMismatch, "item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> constant(Shape shape, std::vector<T> values) {
  if (values.size() != numel(shape)) {
    fail(ErrorCode::ShapeMismatch, "constant: " + std::to_string(values.size()) + " values for shape " +
                                       shape_string(shape));
  }
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> full(Shape shape, T value) {
  const std::size_t n = numel(shape);
  return constant<T>(std::move(shape), std::vector<T>(n, value));
}

template <typename T>
Tensor<T> Tape<T>::variable(Shape shape, std::vector<T> values, std::string name) {
  Tensor<T> t = constant<T>(std::move(shape), std::move(values));
  t.node()->requires_grad = true;
  t.node()->tape = this;
  t.node()->name = std::move(name);
  nodes_.push_back(t.node_ptr());
  return t;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    fail(ErrorCode::NonScalarLoss, "backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad() || loss.tape() != this) {
    fail(ErrorCode::NonScalarLoss, "loss was not recorded on this tape");
  }
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
  for (auto& n : nodes_) {
    if (!n->backward) n->grad_buffer();
  }
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                      typename Node<T>::BackwardFn backward) {
  Tape<T>* tape = nullptr;
  for (const auto& p : parents) {
    if (p.defined() && p.requires_grad()) {
      tape = p.tape();
      break;
    }
  }
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (tape != nullptr) {
    n->requires_grad = true;
    n->tape = tape;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward = std::move(backward);
    tape->push(n);
  }
  return Tensor<T>(std::move(n));
}

template <typename T>
Tensor<T> detach(const Tensor<T>& t) {
  return constant<T>(t.shape(), std::vector<T>(t.data().begin(), t.data().end()));
}

#define GLIOMASEG_INSTANTIATE(T)                                                                \
  template class Tensor<T>;                                                                     \
  template class Tape<T>;                                                                       \
  template Tensor<T> constant<T>(Shape, std::vector<T>);                                        \
  template Tensor<T> full<T>(Shape, T);                                                         \
  template Tensor<T> make_result<T>(Shape, std::vector<T>, std::vector<Tensor<T>>,              \
                                    typename Node<T>::BackwardFn);                              \
  template Tensor<T> detach<T>(const Tensor<T>&);

GLIOMASEG_INSTANTIATE(float)
GLIOMASEG_INSTANTIATE(double)

#undef GLIOMASEG_INSTANTIATE

}  // namespace gliomaseg::ad
