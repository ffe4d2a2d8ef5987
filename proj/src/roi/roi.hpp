#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "io/volume.hpp"
#include "json.hpp"

namespace gliomaseg::roi {

/// Inclusive voxel-index bounds.
struct BBox3 {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};

  int extent(int axis) const { return hi[axis] - lo[axis] + 1; }
  bool valid() const { return lo[0] <= hi[0] && lo[1] <= hi[1] && lo[2] <= hi[2]; }
  bool contains(int x, int y, int z) const {
    return x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && z >= lo[2] && z <= hi[2];
  }
  friend bool operator==(const BBox3&, const BBox3&) = default;
};

/// Tightest box around voxels with probability > threshold; nullopt if none.
std::optional<BBox3> mask_bbox(std::span<const float> probs, const io::Dims3& dims, float threshold = 0.5f);
/// Tightest box around nonzero labels.
std::optional<BBox3> label_bbox(const io::LabelVolume& labels);
/// Tightest box around voxels where any modality is nonzero.
std::optional<BBox3> brain_bbox(const io::MultiModalCase& c);

/// Moves every face outward by `tolerance`, then clips to the grid.
BBox3 expand_bbox(const BBox3& box, int tolerance, const io::Dims3& dims);

/// Everything needed to undo a crop: the source window and the zero padding
/// placed around it.
struct CropRecord {
  io::Dims3 original;
  BBox3 box;  // source voxels copied, inclusive
  std::array<int, 3> pad_lo{0, 0, 0};
  std::array<int, 3> pad_hi{0, 0, 0};

  io::Dims3 cropped_dims() const;
  nlohmann::json to_json() const;
  static CropRecord from_json(const nlohmann::json& j);
};

/// x and y keep the box and are zero-padded symmetrically (extra voxel on the
/// high side) up to min_dims; z becomes a window of exactly min_dims.z
/// centred on the box, shifted to stay inside the grid, padded only when the
/// grid itself is shallower. EmptyBox for an invalid box.
CropRecord plan_crop(const BBox3& box, const io::Dims3& dims, const io::Dims3& min_dims);

io::Volume crop_volume(const io::Volume& v, const CropRecord& r);
io::LabelVolume crop_labels(const io::LabelVolume& v, const CropRecord& r);
io::ChannelVolume crop_channels(const io::ChannelVolume& v, const CropRecord& r);

std::pair<io::MultiModalCase, CropRecord> crop_case(const io::MultiModalCase& c, const BBox3& box,
                                                    const io::Dims3& min_dims);

/// Places the crop interior back at its source indices and drops padding.
/// Outside voxels take `fill[c]` per channel (probabilities: class 0 = 1).
/// RecordMismatch when the grid does not match the record.
io::ChannelVolume restore_to_original(const io::ChannelVolume& cropped, const CropRecord& r,
                                      const std::vector<float>& fill);
/// Background probability 1 outside the crop.
io::ChannelVolume restore_probabilities(const io::ChannelVolume& cropped, const CropRecord& r);
io::LabelVolume restore_labels(const io::LabelVolume& cropped, const CropRecord& r);

}  // namespace gliomaseg::roi
