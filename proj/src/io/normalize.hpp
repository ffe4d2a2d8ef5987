#pragma once

#include "io/volume.hpp"

namespace gliomaseg::io {

enum class NormRegion { All, NonzeroOnly };

struct NormalizeResult {
  Volume volume;
  /// Set when the region's standard deviation fell below 1e-8; the region is
  /// then zero-filled instead of divided.
  bool constant_region = false;
};

/// Z-score over the selected region with the population standard deviation.
/// Voxels outside the region (NonzeroOnly) are set to zero.
NormalizeResult zscore_normalize(const Volume& volume, NormRegion region = NormRegion::NonzeroOnly);

}  // namespace gliomaseg::io
