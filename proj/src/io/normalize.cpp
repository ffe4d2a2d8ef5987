#include "io/normalize.hpp"

#include <cmath>

namespace gliomaseg::io {

NormalizeResult zscore_normalize(const Volume& volume, NormRegion region) {
  auto src = volume.data();
  const auto in_region = [&](float v) { return region == NormRegion::All || v != 0.0f; };

  double sum = 0.0;
  std::size_t count = 0;
  for (float v : src) {
    if (in_region(v)) {
      sum += v;
      ++count;
    }
  }
  const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
  double sq = 0.0;
  for (float v : src) {
    if (in_region(v)) sq += (v - mean) * (v - mean);
  }
  const double sigma = count > 0 ? std::sqrt(sq / static_cast<double>(count)) : 0.0;

  std::vector<float> out(src.size(), 0.0f);
  const bool constant = sigma < 1e-8;
  if (!constant) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (in_region(src[i])) out[i] = static_cast<float>((src[i] - mean) / sigma);
    }
  }
  return {volume.with_data(std::move(out)), constant};
}

}  // namespace gliomaseg::io
