#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"

namespace gliomaseg::ad {

template <typename T>
class BoundParams;

/// Named parameter tensors over one flat buffer, in registration order.
template <typename T>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  void add(std::string name, Shape shape, std::vector<T> values);

  std::size_t size() const { return values_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Entry& entry(const std::string& name) const;

  std::span<T> flat() { return values_; }
  std::span<const T> flat() const { return values_; }
  std::span<T> values(const std::string& name);
  std::span<const T> values(const std::string& name) const;

  /// Replaces the flat buffer; the length must match.
  void unflatten(std::span<const T> flat);

  /// Materializes the parameters as tensors: tape leaves when `tape` is
  /// non-null, detached constants otherwise.
  BoundParams<T> bind(Tape<T>* tape) const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& e : entries_) {
      std::vector<U> v(values_.begin() + static_cast<std::ptrdiff_t>(e.offset),
                       values_.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size));
      out.add(e.name, e.shape, std::move(v));
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::vector<T> values_;
};

template <typename T>
class BoundParams {
 public:
  BoundParams(const ParamSet<T>& params, std::vector<Tensor<T>> tensors)
      : params_(&params), tensors_(std::move(tensors)) {}

  const Tensor<T>& operator[](const std::string& name) const;

  /// Gradients after Tape::backward, flattened in ParamSet order.
  std::vector<T> gradient() const;

 private:
  const ParamSet<T>* params_;
  std::vector<Tensor<T>> tensors_;
};

/// Result of a central finite-difference comparison.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

extern template class ParamSet<float>;
extern template class ParamSet<double>;
extern template class BoundParams<float>;
extern template class BoundParams<double>;

}  // namespace gliomaseg::ad
