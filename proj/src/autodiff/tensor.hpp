#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gliomaseg::ad {

/// Extents, outermost first. Volumetric tensors use (batch, x, y, z, channel)
/// with the channel axis contiguous.
using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
class Tape;

template <typename T>
struct Node {
  using BackwardFn = std::function<void(Node&)>;

  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  Tape<T>* tape = nullptr;
  std::string name;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

/// Shared handle to a value on (or off) a tape. Copies alias the same node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t axis) const { return node_->shape.at(axis); }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t size() const { return node_->value.size(); }
  std::span<const T> data() const { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  T item() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }
  Tape<T>* tape() const { return node_->tape; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Value that never receives gradients.
template <typename T>
Tensor<T> constant(Shape shape, std::vector<T> values);

template <typename T>
Tensor<T> full(Shape shape, T value);

/// Records a reverse-mode computation. Every op whose inputs require gradients
/// appends its output node here, so the node list is topologically ordered.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that accumulates gradients (parameters, inputs under test).
  Tensor<T> variable(Shape shape, std::vector<T> values, std::string name = {});

  /// Propagates d(loss)/d(node) to every recorded node. Leaves that were not
  /// reached receive an all-zero gradient.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }

  void push(const std::shared_ptr<Node<T>>& node) { nodes_.push_back(node); }

 private:
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

/// Builds an op output. When any parent requires gradients the node is
/// recorded on that parent's tape with `backward`; otherwise it is a detached
/// constant and the parents are not retained.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<Tensor<T>> parents,
                      typename Node<T>::BackwardFn backward);

/// Copies the value into a detached constant.
template <typename T>
Tensor<T> detach(const Tensor<T>& t);

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace gliomaseg::ad
