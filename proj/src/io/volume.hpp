#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gliomaseg::io {

struct Dims3 {
  int x = 1;
  int y = 1;
  int z = 1;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  int& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

using Spacing3 = std::array<double, 3>;

/// Linear index of (x, y, z) in an x-fastest grid.
inline std::size_t voxel_index(const Dims3& d, int x, int y, int z) {
  return (static_cast<std::size_t>(z) * static_cast<std::size_t>(d.y) + static_cast<std::size_t>(y)) *
             static_cast<std::size_t>(d.x) +
         static_cast<std::size_t>(x);
}

/// One 3D scalar grid. Construction validates the dims/length invariant;
/// values are never modified afterwards.
class Volume {
 public:
  Volume() = default;
  Volume(Dims3 dims, Spacing3 spacing, std::vector<float> data, std::string name = {});

  const Dims3& dims() const { return dims_; }
  const Spacing3& spacing() const { return spacing_; }
  std::span<const float> data() const { return data_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return data_.size(); }

  float at(int x, int y, int z) const { return data_[voxel_index(dims_, x, y, z)]; }

  /// Same geometry with a replacement payload.
  Volume with_data(std::vector<float> data) const;

 private:
  Dims3 dims_{};
  Spacing3 spacing_{1.0, 1.0, 1.0};
  std::vector<float> data_{0.0f};
  std::string name_;
};

/// Integer voxel labels in the internal alphabet {0 background, 1 necrotic /
/// non-enhancing, 2 edema, 3 enhancing}.
struct LabelVolume {
  Dims3 dims{};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<std::uint8_t> labels;

  std::uint8_t at(int x, int y, int z) const { return labels[voxel_index(dims, x, y, z)]; }
};

/// Several co-registered scalar fields stored channel-major, each channel an
/// x-fastest plane. Used for model inputs, probabilities and logits.
struct ChannelVolume {
  Dims3 dims{};
  int channels = 0;
  std::vector<float> data;

  ChannelVolume() = default;
  ChannelVolume(Dims3 d, int c, float fill = 0.0f)
      : dims(d), channels(c), data(d.count() * static_cast<std::size_t>(c), fill) {}

  std::span<float> channel(int c) {
    return std::span<float>(data).subspan(static_cast<std::size_t>(c) * dims.count(), dims.count());
  }
  std::span<const float> channel(int c) const {
    return std::span<const float>(data).subspan(static_cast<std::size_t>(c) * dims.count(), dims.count());
  }
  float& at(int c, int x, int y, int z) {
    return data[static_cast<std::size_t>(c) * dims.count() + voxel_index(dims, x, y, z)];
  }
  float at(int c, int x, int y, int z) const {
    return data[static_cast<std::size_t>(c) * dims.count() + voxel_index(dims, x, y, z)];
  }
};

enum class Modality { T1 = 0, T1GD = 1, T2 = 2, FLAIR = 3 };
inline constexpr int kModalityCount = 4;
const char* modality_key(Modality m);

struct MultiModalCase {
  std::string case_id;
  std::array<Volume, kModalityCount> modalities;
  std::optional<LabelVolume> label;

  const Volume& modality(Modality m) const { return modalities[static_cast<int>(m)]; }
  const Dims3& dims() const { return modalities[0].dims(); }

  /// Throws DimsMismatch unless every modality and the label share one grid.
  void validate() const;

  /// Stacks the four modalities as channels T1, T1GD, T2, FLAIR.
  ChannelVolume stacked() const;
};

}  // namespace gliomaseg::io
