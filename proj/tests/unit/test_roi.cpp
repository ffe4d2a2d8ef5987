#include <random>
#include <vector>

#include "doctest.h"
#include "roi/roi.hpp"
#include "test_util.hpp"

using namespace gliomaseg;
using namespace gliomaseg::roi;
using io::Dims3;

namespace {

BBox3 box(int x0, int y0, int z0, int x1, int y1, int z1) { return {{x0, y0, z0}, {x1, y1, z1}}; }

io::MultiModalCase ramp_case(Dims3 d) {
  io::MultiModalCase c;
  c.case_id = "ramp";
  for (int m = 0; m < io::kModalityCount; ++m) {
    std::vector<float> v(d.count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) + 0.25f * static_cast<float>(m);
    c.modalities[m] = io::Volume(d, {1.0, 1.0, 1.0}, v);
  }
  io::LabelVolume l;
  l.dims = d;
  l.labels.assign(d.count(), 0);
  for (std::size_t i = 0; i < l.labels.size(); ++i) l.labels[i] = static_cast<std::uint8_t>(i % 4);
  c.label = l;
  return c;
}

}  // namespace

TEST_SUITE("roi") {

TEST_CASE("mask bbox") {
  const Dims3 d{5, 4, 3};
  std::vector<float> p(d.count(), 0.0f);
  CHECK_FALSE(mask_bbox(p, d).has_value());
  p[io::voxel_index(d, 1, 2, 0)] = 0.9f;
  p[io::voxel_index(d, 3, 1, 2)] = 0.6f;
  p[io::voxel_index(d, 4, 3, 1)] = 0.5f;  // not above threshold
  const auto b = mask_bbox(p, d);
  REQUIRE(b.has_value());
  CHECK(*b == box(1, 1, 0, 3, 2, 2));
  CHECK(*mask_bbox(p, d, 0.7f) == box(1, 2, 0, 1, 2, 0));
  CHECK_ERROR(mask_bbox(std::vector<float>(3, 1.0f), d), ErrorCode::GridMismatch);
}

TEST_CASE("expand bbox clips at the grid") {
  const Dims3 d{10, 10, 10};
  CHECK(expand_bbox(box(4, 4, 4, 5, 5, 5), 2, d) == box(2, 2, 2, 7, 7, 7));
  CHECK(expand_bbox(box(1, 0, 8, 2, 9, 9), 12, d) == box(0, 0, 0, 9, 9, 9));
  CHECK(expand_bbox(box(3, 3, 3, 3, 3, 3), 0, d) == box(3, 3, 3, 3, 3, 3));
}

TEST_CASE("label and brain boxes") {
  io::LabelVolume l;
  l.dims = {4, 4, 4};
  l.labels.assign(64, 0);
  CHECK_FALSE(label_bbox(l).has_value());
  l.labels[io::voxel_index(l.dims, 2, 1, 3)] = 2;
  CHECK(*label_bbox(l) == box(2, 1, 3, 2, 1, 3));

  io::MultiModalCase c;
  for (int m = 0; m < io::kModalityCount; ++m) c.modalities[m] = io::Volume({4, 4, 4}, {1, 1, 1}, std::vector<float>(64, 0.0f));
  std::vector<float> v(64, 0.0f);
  v[io::voxel_index({4, 4, 4}, 0, 3, 1)] = -1.0f;
  c.modalities[2] = io::Volume({4, 4, 4}, {1, 1, 1}, v);
  CHECK(*brain_bbox(c) == box(0, 3, 1, 0, 3, 1));
}

TEST_CASE("plan crop padding and depth window") {
  // x, y padded symmetrically with the odd voxel high; z window centred
  const auto r = plan_crop(box(10, 10, 20, 14, 19, 29), {60, 60, 100}, {8, 12, 32});
  CHECK(r.pad_lo == std::array<int, 3>{1, 1, 0});
  CHECK(r.pad_hi == std::array<int, 3>{2, 1, 0});
  CHECK(r.box.lo[2] == 25 - 16);
  CHECK(r.box.extent(2) == 32);
  CHECK(r.cropped_dims() == Dims3{8, 12, 32});

  // window shifted to stay inside
  const auto top = plan_crop(box(0, 0, 95, 9, 9, 99), {60, 60, 100}, {8, 8, 32});
  CHECK(top.box.hi[2] == 99);
  CHECK(top.box.lo[2] == 68);
  CHECK(top.cropped_dims() == Dims3{10, 10, 32});

  // shallow grid: whole depth plus padding
  const auto shallow = plan_crop(box(0, 0, 2, 3, 3, 5), {10, 10, 20}, {4, 4, 32});
  CHECK(shallow.box.lo[2] == 0);
  CHECK(shallow.box.hi[2] == 19);
  CHECK(shallow.pad_lo[2] == 6);
  CHECK(shallow.pad_hi[2] == 6);

  CHECK_ERROR(plan_crop(box(3, 0, 0, 2, 1, 1), {10, 10, 10}, {1, 1, 1}), ErrorCode::EmptyBox);
  CHECK_ERROR(plan_crop(box(0, 0, 0, 10, 1, 1), {10, 10, 10}, {1, 1, 1}), ErrorCode::EmptyBox);
}

TEST_CASE("crop record json") {
  const auto r = plan_crop(box(1, 2, 3, 4, 5, 6), {20, 20, 20}, {6, 6, 8});
  const auto back = CropRecord::from_json(r.to_json());
  CHECK(back.original == r.original);
  CHECK(back.box == r.box);
  CHECK(back.pad_lo == r.pad_lo);
  CHECK(back.pad_hi == r.pad_hi);
}

TEST_CASE("crop and restore") {
  const Dims3 d{9, 7, 12};
  const auto c = ramp_case(d);
  const auto [cropped, rec] = crop_case(c, box(2, 1, 3, 5, 4, 6), {6, 6, 8});
  CHECK(cropped.dims() == Dims3{6, 6, 8});
  REQUIRE(cropped.label.has_value());
  // first interior voxel maps back to the box corner
  const int ox = rec.pad_lo[0], oy = rec.pad_lo[1], oz = rec.pad_lo[2];
  CHECK(cropped.modalities[1].at(ox, oy, oz) == c.modalities[1].at(rec.box.lo[0], rec.box.lo[1], rec.box.lo[2]));
  CHECK(cropped.modalities[0].at(0, 0, 0) == 0.0f);  // padding

  const auto stacked = c.stacked();
  const auto restored = restore_to_original(crop_channels(stacked, rec), rec, {-1.0f, -2.0f, -3.0f, -4.0f});
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x)
        for (int m = 0; m < 4; ++m) {
          const float expect = rec.box.contains(x, y, z) ? stacked.at(m, x, y, z) : -1.0f - static_cast<float>(m);
          CHECK(restored.at(m, x, y, z) == expect);
        }

  const auto labels = restore_labels(*cropped.label, rec);
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x)
        CHECK(labels.at(x, y, z) == (rec.box.contains(x, y, z) ? c.label->at(x, y, z) : 0));

  io::ChannelVolume probs(rec.cropped_dims(), 4, 0.25f);
  const auto full = restore_probabilities(probs, rec);
  CHECK(full.at(0, 0, 0, 0) == 1.0f);
  CHECK(full.at(1, 0, 0, 0) == 0.0f);
  CHECK(full.at(2, 3, 3, rec.box.lo[2]) == 0.25f);

  CHECK_ERROR(restore_labels(*c.label, rec), ErrorCode::RecordMismatch);
}

TEST_CASE("random crops always reach the minimum size") {
  std::mt19937 rng(70);
  for (int t = 0; t < 100; ++t) {
    const Dims3 d{std::uniform_int_distribution<int>(4, 40)(rng), std::uniform_int_distribution<int>(4, 40)(rng),
                  std::uniform_int_distribution<int>(4, 40)(rng)};
    BBox3 b;
    for (int a = 0; a < 3; ++a) {
      const int u = std::uniform_int_distribution<int>(0, d[a] - 1)(rng);
      const int v = std::uniform_int_distribution<int>(0, d[a] - 1)(rng);
      b.lo[a] = std::min(u, v);
      b.hi[a] = std::max(u, v);
    }
    const Dims3 min{12, 12, 16};
    const auto r = plan_crop(b, d, min);
    const auto cd = r.cropped_dims();
    CHECK(cd.x >= min.x);
    CHECK(cd.y >= min.y);
    CHECK(cd.z == min.z);
    CHECK(r.box.lo[0] == b.lo[0]);
    CHECK(r.box.hi[1] == b.hi[1]);
  }
}

}  // TEST_SUITE
