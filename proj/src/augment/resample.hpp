#pragma once

#include <span>
#include <vector>

#include "io/volume.hpp"

namespace gliomaseg::augment {

/// Trilinear sample at a continuous source coordinate; coordinates outside the
/// grid clamp to the nearest edge voxel.
float sample_trilinear(std::span<const float> grid, const io::Dims3& dims, double x, double y, double z);

/// Nearest-neighbour lookup (round half away from zero), clamped to the grid.
std::size_t nearest_index(const io::Dims3& dims, double x, double y, double z);

/// Resizes each channel with cell-centred coordinate mapping.
io::ChannelVolume resize_trilinear(const io::ChannelVolume& in, const io::Dims3& target);
io::ChannelVolume resize_nearest(const io::ChannelVolume& in, const io::Dims3& target);
io::LabelVolume resize_nearest(const io::LabelVolume& in, const io::Dims3& target);

}  // namespace gliomaseg::augment
