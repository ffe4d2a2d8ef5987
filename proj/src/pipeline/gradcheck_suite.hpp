#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gliomaseg::pipeline {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  double seconds = 0.0;
  bool passed = false;
};

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-3;

/// Central finite-difference checks, in double precision, of every
/// differentiable op, block and loss on shapes up to 2x4x4x4x4.
std::vector<GradCheckEntry> run_gradcheck_suite();

nlohmann::json gradcheck_json(const std::vector<GradCheckEntry>& entries);

}  // namespace gliomaseg::pipeline
