#include "io/volume.hpp"

#include <cmath>
#include <utility>

#include "common/error.hpp"

namespace gliomaseg::io {

Volume::Volume(Dims3 dims, Spacing3 spacing, std::vector<float> data, std::string name)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), name_(std::move(name)) {
  if (dims_.x < 1 || dims_.y < 1 || dims_.z < 1) {
    fail(ErrorCode::DimsMismatch, "volume dims must be >= 1");
  }
  if (data_.size() != dims_.count()) {
    fail(ErrorCode::LengthMismatch, "volume payload has " + std::to_string(data_.size()) +
                                        " voxels, dims imply " + std::to_string(dims_.count()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteVoxel, "non-finite voxel in " + name_);
  }
}

Volume Volume::with_data(std::vector<float> data) const {
  return Volume(dims_, spacing_, std::move(data), name_);
}

const char* modality_key(Modality m) {
  switch (m) {
    case Modality::T1: return "t1";
    case Modality::T1GD: return "t1gd";
    case Modality::T2: return "t2";
    case Modality::FLAIR: return "flair";
  }
  return "?";
}

void MultiModalCase::validate() const {
  const Dims3& d = modalities[0].dims();
  for (int m = 1; m < kModalityCount; ++m) {
    if (!(modalities[m].dims() == d) || modalities[m].spacing() != modalities[0].spacing()) {
      fail(ErrorCode::DimsMismatch, "case " + case_id + ": modality " +
                                        modality_key(static_cast<Modality>(m)) +
                                        " grid differs from t1");
    }
  }
  if (label && !(label->dims == d)) {
    fail(ErrorCode::DimsMismatch, "case " + case_id + ": label grid differs from modalities");
  }
}

ChannelVolume MultiModalCase::stacked() const {
  ChannelVolume out(dims(), kModalityCount);
  for (int m = 0; m < kModalityCount; ++m) {
    auto src = modalities[m].data();
    std::copy(src.begin(), src.end(), out.channel(m).begin());
  }
  return out;
}

}  // namespace gliomaseg::io
