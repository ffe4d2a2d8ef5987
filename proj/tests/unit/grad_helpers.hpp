#pragma once

#include <random>
#include <string>
#include <vector>

#include "autodiff/gradcheck.hpp"
#include "autodiff/ops.hpp"

namespace testutil {

inline std::vector<double> uniform_values(std::size_t n, std::uint32_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Values in [-hi, -lo] U [lo, hi]; keeps kinks out of reach of the
/// finite-difference step.
inline std::vector<double> away_from_zero(std::size_t n, std::uint32_t seed, double lo, double hi) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = sign(rng) ? u(rng) : -u(rng);
  return v;
}

inline void add_random(gliomaseg::ad::ParamSet<double>& p, const std::string& name, const gliomaseg::ad::Shape& shape,
                       std::uint32_t seed, double scale = 1.0) {
  auto v = uniform_values(gliomaseg::ad::numel(shape), seed, -scale, scale);
  p.add(name, shape, std::move(v));
}

/// Scalar probe sum(t * r) with a fixed random r; avoids outputs whose plain
/// sum is constant (anything ending in a normalization).
inline gliomaseg::ad::Tensor<double> probe(const gliomaseg::ad::Tensor<double>& t, std::uint32_t seed = 99) {
  using namespace gliomaseg::ad;
  return sum_all(mul(t, constant<double>(t.shape(), uniform_values(t.size(), seed))));
}

}  // namespace testutil
