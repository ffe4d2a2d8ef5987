#pragma once

#include <algorithm>
#include <cmath>

#include "autodiff/params.hpp"

namespace gliomaseg::ad {

/// Compares reverse-mode gradients of a scalar function of `params` against
/// central differences (f(p+h) - f(p-h)) / 2h, evaluated in double precision.
/// Relative error per coordinate uses max(|analytic|, |numeric|, 1e-8) as
/// denominator; the maximum over all coordinates is returned.
///
/// `f` maps BoundParams<double> to a scalar Tensor<double>.
template <typename F>
GradCheckResult finite_diff_check(F&& f, ParamSet<double>& params, double step = 1e-3) {
  std::vector<double> analytic;
  {
    Tape<double> tape;
    auto bound = params.bind(&tape);
    Tensor<double> loss = f(bound);
    tape.backward(loss);
    analytic = bound.gradient();
  }
  GradCheckResult result;
  result.coordinates = params.size();
  auto flat = params.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + step;
    const double fp = f(params.bind(nullptr)).item();
    flat[i] = saved - step;
    const double fm = f(params.bind(nullptr)).item();
    flat[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (i == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace gliomaseg::ad
