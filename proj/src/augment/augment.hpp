#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "io/volume.hpp"

namespace gliomaseg::augment {

/// Separable Gaussian smoothing. Kernels are truncated at radius ceil(3*sigma)
/// and renormalized to unit sum; edges replicate.
std::vector<float> gaussian_filter_3d(std::span<const float> grid, const io::Dims3& dims, double sigma);

/// Per-voxel displacement, in voxels, along each axis.
struct DeformationField {
  io::Dims3 dims;
  std::vector<float> dx, dy, dz;
  double sigma = 0.0;
  double magnitude = 0.0;
};

/// Draws i.i.d. uniform[-1, 1] * magnitude displacements and smooths each
/// component with gaussian_filter_3d.
DeformationField make_deformation_field(const io::Dims3& dims, double sigma, double magnitude, std::uint64_t seed);

/// Resamples every modality (trilinear) and the label (nearest) through one
/// shared field: out(p) = in(p + delta(p)), clamped at the edges.
io::MultiModalCase apply_deformation(const io::MultiModalCase& c, const DeformationField& field);
io::MultiModalCase elastic_deform(const io::MultiModalCase& c, double sigma, double magnitude, std::uint64_t seed);

/// In-plane rotation about the z axis through the grid centre.
io::MultiModalCase rotate_z(const io::MultiModalCase& c, double angle_deg);
io::MultiModalCase random_rotation(const io::MultiModalCase& c, double max_angle_deg, std::uint64_t seed);

/// Adds one uniform[-max_delta, max_delta] offset per modality; labels untouched.
io::MultiModalCase random_brightness(const io::MultiModalCase& c, double max_delta, std::uint64_t seed);

/// Axis-reflection variant for test-time augmentation; bit 0 flips x, bit 1
/// flips y, bit 2 flips z.
struct TtaVariant {
  int id = 0;

  static TtaVariant from_id(int id);
  bool flip_x() const { return (id & 1) != 0; }
  bool flip_y() const { return (id & 2) != 0; }
  bool flip_z() const { return (id & 4) != 0; }
};
inline constexpr int kTtaVariantCount = 8;

io::ChannelVolume tta_apply(const io::ChannelVolume& v, TtaVariant variant);
/// Reflections are involutions, so inversion re-applies the same flips.
io::ChannelVolume tta_invert(const io::ChannelVolume& prediction, TtaVariant variant);

}  // namespace gliomaseg::augment
