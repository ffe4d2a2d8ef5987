#include "augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "augment/resample.hpp"
#include "common/error.hpp"

namespace gliomaseg::augment {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

// One separable pass along `axis` with replicated edges.
void filter_axis(const std::vector<double>& src, std::vector<double>& dst, const io::Dims3& d, int axis,
                 const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = d[axis];
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(d.x)
                                                        : static_cast<std::size_t>(d.x) * static_cast<std::size_t>(d.y));
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const int pos = axis == 0 ? x : (axis == 1 ? y : z);
        const std::size_t base = io::voxel_index(d, x, y, z) - static_cast<std::size_t>(pos) * stride;
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int s = std::clamp(pos + t, 0, n - 1);
          acc += kernel[static_cast<std::size_t>(t + radius)] * src[base + static_cast<std::size_t>(s) * stride];
        }
        dst[io::voxel_index(d, x, y, z)] = acc;
      }
    }
  }
}

std::vector<float> uniform_noise(std::size_t n, double magnitude, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(u(rng) * magnitude);
  return out;
}

io::MultiModalCase resample_case(const io::MultiModalCase& c, auto&& source_of) {
  const io::Dims3& d = c.dims();
  io::MultiModalCase out;
  out.case_id = c.case_id;
  for (int m = 0; m < io::kModalityCount; ++m) {
    auto src = c.modalities[m].data();
    std::vector<float> dst(d.count());
    for (int z = 0; z < d.z; ++z) {
      for (int y = 0; y < d.y; ++y) {
        for (int x = 0; x < d.x; ++x) {
          const auto [sx, sy, sz] = source_of(x, y, z);
          dst[io::voxel_index(d, x, y, z)] = sample_trilinear(src, d, sx, sy, sz);
        }
      }
    }
    out.modalities[m] = c.modalities[m].with_data(std::move(dst));
  }
  if (c.label) {
    io::LabelVolume lab{d, c.label->spacing, std::vector<std::uint8_t>(d.count())};
    for (int z = 0; z < d.z; ++z) {
      for (int y = 0; y < d.y; ++y) {
        for (int x = 0; x < d.x; ++x) {
          const auto [sx, sy, sz] = source_of(x, y, z);
          lab.labels[io::voxel_index(d, x, y, z)] = c.label->labels[nearest_index(d, sx, sy, sz)];
        }
      }
    }
    out.label = std::move(lab);
  }
  return out;
}

}  // namespace

std::vector<float> gaussian_filter_3d(std::span<const float> grid, const io::Dims3& dims, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorCode::NonPositiveSigma, "gaussian sigma must be > 0");
  if (grid.size() != dims.count()) fail(ErrorCode::ShapeMismatch, "grid length does not match dims");
  const auto kernel = gaussian_kernel(sigma);
  std::vector<double> a(grid.begin(), grid.end());
  std::vector<double> b(a.size());
  filter_axis(a, b, dims, 0, kernel);
  filter_axis(b, a, dims, 1, kernel);
  filter_axis(a, b, dims, 2, kernel);
  return std::vector<float>(b.begin(), b.end());
}

DeformationField make_deformation_field(const io::Dims3& dims, double sigma, double magnitude, std::uint64_t seed) {
  if (!(sigma > 0.0)) fail(ErrorCode::NonPositiveSigma, "elastic sigma must be > 0");
  if (magnitude < 0.0) fail(ErrorCode::NonPositiveMagnitude, "elastic magnitude must be >= 0");
  std::mt19937_64 rng(seed);
  DeformationField f;
  f.dims = dims;
  f.sigma = sigma;
  f.magnitude = magnitude;
  f.dx = gaussian_filter_3d(uniform_noise(dims.count(), magnitude, rng), dims, sigma);
  f.dy = gaussian_filter_3d(uniform_noise(dims.count(), magnitude, rng), dims, sigma);
  f.dz = gaussian_filter_3d(uniform_noise(dims.count(), magnitude, rng), dims, sigma);
  return f;
}

io::MultiModalCase apply_deformation(const io::MultiModalCase& c, const DeformationField& field) {
  if (!(field.dims == c.dims())) fail(ErrorCode::DimsMismatch, "deformation field grid differs from case");
  const io::Dims3& d = c.dims();
  return resample_case(c, [&](int x, int y, int z) {
    const std::size_t i = io::voxel_index(d, x, y, z);
    return std::array<double, 3>{x + static_cast<double>(field.dx[i]), y + static_cast<double>(field.dy[i]),
                                 z + static_cast<double>(field.dz[i])};
  });
}

io::MultiModalCase elastic_deform(const io::MultiModalCase& c, double sigma, double magnitude, std::uint64_t seed) {
  const auto field = make_deformation_field(c.dims(), sigma, magnitude, seed);
  if (magnitude == 0.0) return c;
  return apply_deformation(c, field);
}

io::MultiModalCase rotate_z(const io::MultiModalCase& c, double angle_deg) {
  if (angle_deg == 0.0) return c;
  const io::Dims3& d = c.dims();
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = 0.5 * (d.x - 1);
  const double cy = 0.5 * (d.y - 1);
  // Inverse mapping: each output voxel samples the source rotated by -theta.
  return resample_case(c, [&](int x, int y, int z) {
    const double px = x - cx;
    const double py = y - cy;
    return std::array<double, 3>{cx + cs * px + sn * py, cy - sn * px + cs * py, static_cast<double>(z)};
  });
}

io::MultiModalCase random_rotation(const io::MultiModalCase& c, double max_angle_deg, std::uint64_t seed) {
  const double m = std::abs(max_angle_deg);
  if (m == 0.0) return c;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-m, m);
  return rotate_z(c, u(rng));
}

io::MultiModalCase random_brightness(const io::MultiModalCase& c, double max_delta, std::uint64_t seed) {
  const double m = std::abs(max_delta);
  if (m == 0.0) return c;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-m, m);
  io::MultiModalCase out = c;
  for (int k = 0; k < io::kModalityCount; ++k) {
    const float b = static_cast<float>(u(rng));
    auto src = c.modalities[k].data();
    std::vector<float> dst(src.begin(), src.end());
    for (float& v : dst) v += b;
    out.modalities[k] = c.modalities[k].with_data(std::move(dst));
  }
  return out;
}

TtaVariant TtaVariant::from_id(int id) {
  if (id < 0 || id >= kTtaVariantCount) fail(ErrorCode::BadVariantId, "TTA variant id must be in 0..7");
  return TtaVariant{id};
}

io::ChannelVolume tta_apply(const io::ChannelVolume& v, TtaVariant variant) {
  TtaVariant::from_id(variant.id);
  const io::Dims3& d = v.dims;
  io::ChannelVolume out(d, v.channels);
  for (int c = 0; c < v.channels; ++c) {
    for (int z = 0; z < d.z; ++z) {
      const int sz = variant.flip_z() ? d.z - 1 - z : z;
      for (int y = 0; y < d.y; ++y) {
        const int sy = variant.flip_y() ? d.y - 1 - y : y;
        for (int x = 0; x < d.x; ++x) {
          const int sx = variant.flip_x() ? d.x - 1 - x : x;
          out.at(c, x, y, z) = v.at(c, sx, sy, sz);
        }
      }
    }
  }
  return out;
}

io::ChannelVolume tta_invert(const io::ChannelVolume& prediction, TtaVariant variant) {
  return tta_apply(prediction, variant);
}

}  // namespace gliomaseg::augment
