#include "roi/roi.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace gliomaseg::roi {

using io::Dims3;

namespace {

template <typename Pred>
std::optional<BBox3> bbox_where(const Dims3& d, Pred&& inside) {
  BBox3 b{{d.x, d.y, d.z}, {-1, -1, -1}};
  bool any = false;
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        if (!inside(io::voxel_index(d, x, y, z))) continue;
        any = true;
        const int p[3] = {x, y, z};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = std::min(b.lo[a], p[a]);
          b.hi[a] = std::max(b.hi[a], p[a]);
        }
      }
  if (!any) return std::nullopt;
  return b;
}

// Calls f(cropped voxel, source voxel) for every cropped voxel that maps to
// a source voxel.
template <typename F>
void for_each_mapped(const CropRecord& r, F&& f) {
  const Dims3 cd = r.cropped_dims();
  for (int z = 0; z < r.box.extent(2); ++z)
    for (int y = 0; y < r.box.extent(1); ++y)
      for (int x = 0; x < r.box.extent(0); ++x) {
        const std::size_t dst = io::voxel_index(cd, x + r.pad_lo[0], y + r.pad_lo[1], z + r.pad_lo[2]);
        const std::size_t src = io::voxel_index(r.original, x + r.box.lo[0], y + r.box.lo[1], z + r.box.lo[2]);
        f(dst, src);
      }
}

void require_grid(const Dims3& d, const Dims3& expected, const char* what) {
  if (!(d == expected)) fail(ErrorCode::RecordMismatch, std::string(what) + " grid does not match the crop record");
}

}  // namespace

std::optional<BBox3> mask_bbox(std::span<const float> probs, const Dims3& dims, float threshold) {
  if (probs.size() != dims.count()) fail(ErrorCode::GridMismatch, "mask_bbox: size does not match dims");
  return bbox_where(dims, [&](std::size_t i) { return probs[i] > threshold; });
}

std::optional<BBox3> label_bbox(const io::LabelVolume& labels) {
  return bbox_where(labels.dims, [&](std::size_t i) { return labels.labels[i] != 0; });
}

std::optional<BBox3> brain_bbox(const io::MultiModalCase& c) {
  return bbox_where(c.dims(), [&](std::size_t i) {
    for (const auto& m : c.modalities) {
      if (m.data()[i] != 0.0f) return true;
    }
    return false;
  });
}

BBox3 expand_bbox(const BBox3& box, int tolerance, const Dims3& dims) {
  BBox3 out;
  for (int a = 0; a < 3; ++a) {
    out.lo[a] = std::max(0, box.lo[a] - tolerance);
    out.hi[a] = std::min(dims[a] - 1, box.hi[a] + tolerance);
  }
  return out;
}

Dims3 CropRecord::cropped_dims() const {
  return {box.extent(0) + pad_lo[0] + pad_hi[0], box.extent(1) + pad_lo[1] + pad_hi[1],
          box.extent(2) + pad_lo[2] + pad_hi[2]};
}

nlohmann::json CropRecord::to_json() const {
  return {{"original", {original.x, original.y, original.z}},
          {"lo", box.lo},
          {"hi", box.hi},
          {"pad_lo", pad_lo},
          {"pad_hi", pad_hi}};
}

CropRecord CropRecord::from_json(const nlohmann::json& j) {
  CropRecord r;
  try {
    const auto o = j.at("original").get<std::array<int, 3>>();
    r.original = {o[0], o[1], o[2]};
    r.box.lo = j.at("lo").get<std::array<int, 3>>();
    r.box.hi = j.at("hi").get<std::array<int, 3>>();
    r.pad_lo = j.at("pad_lo").get<std::array<int, 3>>();
    r.pad_hi = j.at("pad_hi").get<std::array<int, 3>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::RecordMismatch, std::string("crop record: ") + e.what());
  }
  for (int a = 0; a < 3; ++a) {
    if (r.box.lo[a] < 0 || r.box.hi[a] >= r.original[a] || r.box.lo[a] > r.box.hi[a] || r.pad_lo[a] < 0 ||
        r.pad_hi[a] < 0) {
      fail(ErrorCode::RecordMismatch, "crop record is inconsistent with its original grid");
    }
  }
  return r;
}

CropRecord plan_crop(const BBox3& box, const Dims3& dims, const Dims3& min_dims) {
  if (!box.valid()) fail(ErrorCode::EmptyBox, "cannot crop to an empty box");
  for (int a = 0; a < 3; ++a) {
    if (box.lo[a] < 0 || box.hi[a] >= dims[a]) fail(ErrorCode::EmptyBox, "crop box leaves the volume");
  }
  CropRecord r;
  r.original = dims;
  r.box = box;
  for (int a = 0; a < 2; ++a) {
    const int missing = std::max(0, min_dims[a] - box.extent(a));
    r.pad_lo[a] = missing / 2;
    r.pad_hi[a] = missing - missing / 2;
  }
  const int depth = min_dims.z;
  if (dims.z >= depth) {
    const int centre = (box.lo[2] + box.hi[2] + 1) / 2;
    const int start = std::clamp(centre - depth / 2, 0, dims.z - depth);
    r.box.lo[2] = start;
    r.box.hi[2] = start + depth - 1;
  } else {
    r.box.lo[2] = 0;
    r.box.hi[2] = dims.z - 1;
    const int missing = depth - dims.z;
    r.pad_lo[2] = missing / 2;
    r.pad_hi[2] = missing - missing / 2;
  }
  return r;
}

io::Volume crop_volume(const io::Volume& v, const CropRecord& r) {
  require_grid(v.dims(), r.original, "volume");
  std::vector<float> out(r.cropped_dims().count(), 0.0f);
  auto src = v.data();
  for_each_mapped(r, [&](std::size_t d, std::size_t s) { out[d] = src[s]; });
  return io::Volume(r.cropped_dims(), v.spacing(), std::move(out), v.name());
}

io::LabelVolume crop_labels(const io::LabelVolume& v, const CropRecord& r) {
  require_grid(v.dims, r.original, "label");
  io::LabelVolume out{r.cropped_dims(), v.spacing, std::vector<std::uint8_t>(r.cropped_dims().count(), 0)};
  for_each_mapped(r, [&](std::size_t d, std::size_t s) { out.labels[d] = v.labels[s]; });
  return out;
}

io::ChannelVolume crop_channels(const io::ChannelVolume& v, const CropRecord& r) {
  require_grid(v.dims, r.original, "channel");
  io::ChannelVolume out(r.cropped_dims(), v.channels);
  for (int c = 0; c < v.channels; ++c) {
    auto src = v.channel(c);
    auto dst = out.channel(c);
    for_each_mapped(r, [&](std::size_t d, std::size_t s) { dst[d] = src[s]; });
  }
  return out;
}

std::pair<io::MultiModalCase, CropRecord> crop_case(const io::MultiModalCase& c, const BBox3& box,
                                                    const Dims3& min_dims) {
  const CropRecord r = plan_crop(box, c.dims(), min_dims);
  io::MultiModalCase out;
  out.case_id = c.case_id;
  for (int m = 0; m < io::kModalityCount; ++m) out.modalities[m] = crop_volume(c.modalities[m], r);
  if (c.label) out.label = crop_labels(*c.label, r);
  return {std::move(out), r};
}

io::ChannelVolume restore_to_original(const io::ChannelVolume& cropped, const CropRecord& r,
                                      const std::vector<float>& fill) {
  require_grid(cropped.dims, r.cropped_dims(), "prediction");
  if (fill.size() != static_cast<std::size_t>(cropped.channels)) {
    fail(ErrorCode::RecordMismatch, "restore: one fill value per channel is required");
  }
  io::ChannelVolume out(r.original, cropped.channels);
  for (int c = 0; c < cropped.channels; ++c) {
    auto dst = out.channel(c);
    std::fill(dst.begin(), dst.end(), fill[static_cast<std::size_t>(c)]);
    auto src = cropped.channel(c);
    for_each_mapped(r, [&](std::size_t d, std::size_t s) { dst[s] = src[d]; });
  }
  return out;
}

io::ChannelVolume restore_probabilities(const io::ChannelVolume& cropped, const CropRecord& r) {
  std::vector<float> fill(static_cast<std::size_t>(cropped.channels), 0.0f);
  fill[0] = 1.0f;
  return restore_to_original(cropped, r, fill);
}

io::LabelVolume restore_labels(const io::LabelVolume& cropped, const CropRecord& r) {
  require_grid(cropped.dims, r.cropped_dims(), "label");
  io::LabelVolume out{r.original, cropped.spacing, std::vector<std::uint8_t>(r.original.count(), 0)};
  for_each_mapped(r, [&](std::size_t d, std::size_t s) { out.labels[s] = cropped.labels[d]; });
  return out;
}

}  // namespace gliomaseg::roi
