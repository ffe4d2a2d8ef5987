#include "autodiff/params.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace gliomaseg::ad {

template <typename T>
void ParamSet<T>::add(std::string name, Shape shape, std::vector<T> values) {
  if (index_.count(name) != 0) fail(ErrorCode::ConfigError, "duplicate parameter name " + name);
  if (values.size() != numel(shape)) fail(ErrorCode::ShapeMismatch, "parameter " + name + ": value count mismatch");
  Entry e{name, std::move(shape), values_.size(), values.size()};
  values_.insert(values_.end(), values.begin(), values.end());
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
}

template <typename T>
const typename ParamSet<T>::Entry& ParamSet<T>::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::CheckpointMismatch, "unknown parameter " + name);
  return entries_[it->second];
}

template <typename T>
std::span<T> ParamSet<T>::values(const std::string& name) {
  const Entry& e = entry(name);
  return std::span<T>(values_).subspan(e.offset, e.size);
}

template <typename T>
std::span<const T> ParamSet<T>::values(const std::string& name) const {
  const Entry& e = entry(name);
  return std::span<const T>(values_).subspan(e.offset, e.size);
}

template <typename T>
void ParamSet<T>::unflatten(std::span<const T> flat) {
  if (flat.size() != values_.size()) fail(ErrorCode::LengthMismatch, "unflatten: parameter count mismatch");
  std::copy(flat.begin(), flat.end(), values_.begin());
}

template <typename T>
BoundParams<T> ParamSet<T>::bind(Tape<T>* tape) const {
  std::vector<Tensor<T>> tensors;
  tensors.reserve(entries_.size());
  for (const auto& e : entries_) {
    std::vector<T> v(values_.begin() + static_cast<std::ptrdiff_t>(e.offset),
                     values_.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size));
    tensors.push_back(tape ? tape->variable(e.shape, std::move(v), e.name) : constant<T>(e.shape, std::move(v)));
  }
  return BoundParams<T>(*this, std::move(tensors));
}

template <typename T>
const Tensor<T>& BoundParams<T>::operator[](const std::string& name) const {
  const auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return tensors_[i];
  }
  fail(ErrorCode::ConfigError, "parameter " + name + " is not bound");
}

template <typename T>
std::vector<T> BoundParams<T>::gradient() const {
  std::vector<T> g(params_->size(), T(0));
  const auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto src = tensors_[i].grad();
    if (src.empty()) continue;
    std::copy(src.begin(), src.end(), g.begin() + static_cast<std::ptrdiff_t>(entries[i].offset));
  }
  return g;
}

template class ParamSet<float>;
template class ParamSet<double>;
template class BoundParams<float>;
template class BoundParams<double>;

}  // namespace gliomaseg::ad
