#include "augment/resample.hpp"

#include <algorithm>
#include <cmath>

namespace gliomaseg::augment {

namespace {

inline double clamp_coord(double v, int n) { return std::clamp(v, 0.0, static_cast<double>(n - 1)); }

inline double source_coord(int o, int in_n, int out_n) {
  return (static_cast<double>(o) + 0.5) * static_cast<double>(in_n) / static_cast<double>(out_n) - 0.5;
}

inline int nearest_source(int o, int in_n, int out_n) {
  const int s = static_cast<int>(std::floor((static_cast<double>(o) + 0.5) * in_n / static_cast<double>(out_n)));
  return std::clamp(s, 0, in_n - 1);
}

}  // namespace

float sample_trilinear(std::span<const float> grid, const io::Dims3& d, double x, double y, double z) {
  x = clamp_coord(x, d.x);
  y = clamp_coord(y, d.y);
  z = clamp_coord(z, d.z);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int z0 = static_cast<int>(std::floor(z));
  const int x1 = std::min(x0 + 1, d.x - 1);
  const int y1 = std::min(y0 + 1, d.y - 1);
  const int z1 = std::min(z0 + 1, d.z - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double fz = z - z0;
  const auto v = [&](int xi, int yi, int zi) { return static_cast<double>(grid[io::voxel_index(d, xi, yi, zi)]); };
  // Exact zero weights are skipped so integer coordinates reproduce the
  // source value bit-for-bit.
  const auto lerp = [](double a, double b, double t) { return t == 0.0 ? a : a + (b - a) * t; };
  const double c00 = lerp(v(x0, y0, z0), v(x1, y0, z0), fx);
  const double c10 = lerp(v(x0, y1, z0), v(x1, y1, z0), fx);
  const double c01 = lerp(v(x0, y0, z1), v(x1, y0, z1), fx);
  const double c11 = lerp(v(x0, y1, z1), v(x1, y1, z1), fx);
  const double c0 = lerp(c00, c10, fy);
  const double c1 = lerp(c01, c11, fy);
  return static_cast<float>(lerp(c0, c1, fz));
}

std::size_t nearest_index(const io::Dims3& d, double x, double y, double z) {
  const int xi = static_cast<int>(std::lround(clamp_coord(x, d.x)));
  const int yi = static_cast<int>(std::lround(clamp_coord(y, d.y)));
  const int zi = static_cast<int>(std::lround(clamp_coord(z, d.z)));
  return io::voxel_index(d, xi, yi, zi);
}

io::ChannelVolume resize_trilinear(const io::ChannelVolume& in, const io::Dims3& target) {
  io::ChannelVolume out(target, in.channels);
  for (int c = 0; c < in.channels; ++c) {
    auto src = in.channel(c);
    auto dst = out.channel(c);
    for (int z = 0; z < target.z; ++z) {
      const double sz = source_coord(z, in.dims.z, target.z);
      for (int y = 0; y < target.y; ++y) {
        const double sy = source_coord(y, in.dims.y, target.y);
        for (int x = 0; x < target.x; ++x) {
          dst[io::voxel_index(target, x, y, z)] =
              sample_trilinear(src, in.dims, source_coord(x, in.dims.x, target.x), sy, sz);
        }
      }
    }
  }
  return out;
}

io::ChannelVolume resize_nearest(const io::ChannelVolume& in, const io::Dims3& target) {
  io::ChannelVolume out(target, in.channels);
  for (int c = 0; c < in.channels; ++c) {
    for (int z = 0; z < target.z; ++z) {
      const int sz = nearest_source(z, in.dims.z, target.z);
      for (int y = 0; y < target.y; ++y) {
        const int sy = nearest_source(y, in.dims.y, target.y);
        for (int x = 0; x < target.x; ++x) {
          out.at(c, x, y, z) = in.at(c, nearest_source(x, in.dims.x, target.x), sy, sz);
        }
      }
    }
  }
  return out;
}

io::LabelVolume resize_nearest(const io::LabelVolume& in, const io::Dims3& target) {
  io::LabelVolume out{target, in.spacing, std::vector<std::uint8_t>(target.count())};
  for (int z = 0; z < target.z; ++z) {
    const int sz = nearest_source(z, in.dims.z, target.z);
    for (int y = 0; y < target.y; ++y) {
      const int sy = nearest_source(y, in.dims.y, target.y);
      for (int x = 0; x < target.x; ++x) {
        out.labels[io::voxel_index(target, x, y, z)] = in.at(nearest_source(x, in.dims.x, target.x), sy, sz);
      }
    }
  }
  return out;
}

}  // namespace gliomaseg::augment
