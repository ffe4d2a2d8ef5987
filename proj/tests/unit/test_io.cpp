#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"
#include "io/dataset.hpp"
#include "io/nifti.hpp"
#include "io/normalize.hpp"
#include "io/raw.hpp"
#include "test_util.hpp"

using namespace gliomaseg;
using namespace gliomaseg::io;

namespace {

// Minimal NIfTI-1 writer kept independent of the library's encoder.
struct HandHeader {
  std::int16_t datatype = 16;
  std::int16_t bitpix = 32;
  std::int16_t dims[3] = {1, 1, 1};
  float pixdim[3] = {1.0f, 1.0f, 1.0f};
  float slope = 0.0f;
  float inter = 0.0f;
  const char* magic = "n+1";
};

template <typename T>
void put(std::vector<char>& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

void write_hand_nifti(const std::filesystem::path& path, const HandHeader& h, const void* payload,
                      std::size_t payload_bytes) {
  std::vector<char> buf(352, 0);
  put<std::int32_t>(buf, 0, 348);
  put<std::int16_t>(buf, 40, 3);
  for (int i = 0; i < 3; ++i) put<std::int16_t>(buf, 42 + 2 * i, h.dims[i]);
  put<std::int16_t>(buf, 48, 1);
  put<std::int16_t>(buf, 70, h.datatype);
  put<std::int16_t>(buf, 72, h.bitpix);
  put<float>(buf, 76, 1.0f);
  for (int i = 0; i < 3; ++i) put<float>(buf, 80 + 4 * i, h.pixdim[i]);
  put<float>(buf, 108, 352.0f);
  put<float>(buf, 112, h.slope);
  put<float>(buf, 116, h.inter);
  std::memcpy(buf.data() + 344, h.magic, 4);
  std::ofstream out(path, std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
}

Volume random_volume(Dims3 d, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n(0.0f, 3.0f);
  std::vector<float> v(d.count());
  for (auto& x : v) x = n(rng);
  return Volume(d, {1.0, 1.0, 1.0}, std::move(v));
}

void write_bytes(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_SUITE("volume-io") {

TEST_CASE("read_nifti: float32 zeros") {
  testutil::TempDir dir("nii");
  HandHeader h;
  h.dims[0] = h.dims[1] = h.dims[2] = 4;
  std::vector<float> zeros(64, 0.0f);
  write_hand_nifti(dir / "z.nii", h, zeros.data(), zeros.size() * 4);
  const Volume v = read_nifti(dir / "z.nii");
  CHECK(v.dims() == Dims3{4, 4, 4});
  for (float x : v.data()) CHECK(x == 0.0f);
}

TEST_CASE("read_nifti: int16 with slope and intercept") {
  testutil::TempDir dir("nii");
  HandHeader h;
  h.datatype = 4;
  h.bitpix = 16;
  h.dims[0] = 2;
  h.slope = 0.5f;
  h.inter = 1.0f;
  h.pixdim[0] = 0.9f;
  const std::int16_t payload[2] = {10, 20};
  write_hand_nifti(dir / "s.nii", h, payload, sizeof(payload));
  const Volume v = read_nifti(dir / "s.nii");
  REQUIRE(v.size() == 2);
  CHECK(v.data()[0] == 6.0f);
  CHECK(v.data()[1] == 11.0f);
  CHECK(v.spacing()[0] == doctest::Approx(0.9));
}

TEST_CASE("read_nifti: uint8 and float64 payloads") {
  testutil::TempDir dir("nii");
  HandHeader h;
  h.dims[0] = 3;
  h.datatype = 2;
  h.bitpix = 8;
  const std::uint8_t u8[3] = {0, 7, 255};
  write_hand_nifti(dir / "u.nii", h, u8, 3);
  const Volume a = read_nifti(dir / "u.nii");
  CHECK(a.data()[2] == 255.0f);
  h.datatype = 64;
  h.bitpix = 64;
  const double f64[3] = {-1.5, 0.25, 3.0};
  write_hand_nifti(dir / "d.nii", h, f64, sizeof(f64));
  const Volume b = read_nifti(dir / "d.nii");
  CHECK(b.data()[0] == -1.5f);
  CHECK(b.data()[1] == 0.25f);
}

TEST_CASE("read_nifti: rejects bad input") {
  testutil::TempDir dir("nii");
  HandHeader h;
  h.dims[0] = 2;
  const float payload[2] = {1.0f, 2.0f};

  h.magic = "ni1";
  write_hand_nifti(dir / "magic.nii", h, payload, sizeof(payload));
  CHECK_ERROR(read_nifti(dir / "magic.nii"), ErrorCode::BadMagic);

  h.magic = "n+1";
  h.datatype = 512;
  write_hand_nifti(dir / "dt.nii", h, payload, sizeof(payload));
  CHECK_ERROR(read_nifti(dir / "dt.nii"), ErrorCode::UnsupportedDatatype);

  h.datatype = 16;
  write_hand_nifti(dir / "short.nii", h, payload, 4);
  CHECK_ERROR(read_nifti(dir / "short.nii"), ErrorCode::TruncatedPayload);

  const float nan_payload[2] = {1.0f, std::nanf("")};
  write_hand_nifti(dir / "nan.nii", h, nan_payload, sizeof(nan_payload));
  CHECK_ERROR(read_nifti(dir / "nan.nii"), ErrorCode::NonFiniteVoxel);

  write_bytes(dir / "tiny.nii", "abc");
  CHECK_ERROR(read_nifti(dir / "tiny.nii"), ErrorCode::TruncatedPayload);
}

TEST_CASE("nifti ramp round trip keeps ordering") {
  testutil::TempDir dir("nii");
  std::vector<float> ramp(27);
  for (int i = 0; i < 27; ++i) ramp[i] = static_cast<float>(i);
  const Volume v({3, 3, 3}, {1.0, 2.0, 3.0}, ramp);
  write_nifti(v, dir / "ramp.nii");
  const Volume r = read_nifti(dir / "ramp.nii");
  CHECK(r.at(2, 0, 0) == 2.0f);
  CHECK(r.at(0, 1, 0) == 3.0f);
  CHECK(r.at(0, 0, 1) == 9.0f);
  CHECK(r.spacing()[2] == doctest::Approx(3.0));
  CHECK(std::equal(ramp.begin(), ramp.end(), r.data().begin()));
}

TEST_CASE("nifti round trip is bit-exact on random float32") {
  testutil::TempDir dir("nii");
  const Volume v = random_volume({5, 6, 7}, 3);
  write_nifti(v, dir / "r.nii");
  const Volume r = read_nifti(dir / "r.nii");
  CHECK(std::memcmp(v.data().data(), r.data().data(), v.size() * 4) == 0);
}

TEST_CASE("read_raw: tiny payload") {
  testutil::TempDir dir("raw");
  const float payload[2] = {1.0f, -1.0f};
  std::ofstream(dir / "a.raw", std::ios::binary).write(reinterpret_cast<const char*>(payload), 8);
  write_bytes(dir / "a.json", R"({"dims":[2,1,1],"dtype":"f32","spacing":[1,1,1]})");
  const Volume v = read_raw(dir / "a.raw", dir / "a.json");
  CHECK(v.data()[0] == 1.0f);
  CHECK(v.data()[1] == -1.0f);
}

TEST_CASE("read_raw: errors") {
  testutil::TempDir dir("raw");
  std::vector<float> seven(7, 1.0f);
  std::ofstream(dir / "b.raw", std::ios::binary).write(reinterpret_cast<const char*>(seven.data()), 28);
  write_bytes(dir / "b.json", R"({"dims":[2,2,2],"dtype":"f32","spacing":[1,1,1]})");
  CHECK_ERROR(read_raw(dir / "b.raw", dir / "b.json"), ErrorCode::LengthMismatch);
  write_bytes(dir / "bad.json", "{dims: nope");
  CHECK_ERROR(read_raw(dir / "b.raw", dir / "bad.json"), ErrorCode::SidecarParse);
  write_bytes(dir / "dtype.json", R"({"dims":[7,1,1],"dtype":"f64"})");
  CHECK_ERROR(read_raw(dir / "b.raw", dir / "dtype.json"), ErrorCode::SidecarParse);
}

TEST_CASE("raw round trip is bit-exact") {
  testutil::TempDir dir("raw");
  const Volume v = random_volume({8, 8, 8}, 11);
  write_raw(v, dir / "v.raw", dir / "v.json");
  const Volume r = read_raw(dir / "v.raw", dir / "v.json");
  CHECK(r.dims() == v.dims());
  CHECK(std::memcmp(v.data().data(), r.data().data(), v.size() * 4) == 0);
  write_volume(v, dir / "w.raw");
  CHECK(std::filesystem::exists(sidecar_for(dir / "w.raw")));
  CHECK(std::memcmp(read_volume(dir / "w.raw").data().data(), v.data().data(), v.size() * 4) == 0);
}

TEST_CASE("volume invariants") {
  CHECK_ERROR(Volume({2, 2, 2}, {1, 1, 1}, std::vector<float>(7)), ErrorCode::LengthMismatch);
  CHECK_ERROR(Volume({0, 2, 2}, {1, 1, 1}, std::vector<float>{}), ErrorCode::DimsMismatch);
  CHECK_ERROR(Volume({1, 1, 1}, {1, 1, 1}, std::vector<float>{INFINITY}), ErrorCode::NonFiniteVoxel);
}

TEST_CASE("zscore_normalize: hand example") {
  const Volume v({3, 1, 1}, {1, 1, 1}, {2.0f, 4.0f, 6.0f});
  const NormalizeResult r = zscore_normalize(v, NormRegion::All);
  // mu = 4, sigma = sqrt(8/3)
  const double s = std::sqrt(8.0 / 3.0);
  CHECK(r.volume.data()[0] == doctest::Approx(-2.0 / s).epsilon(1e-6));
  CHECK(r.volume.data()[1] == doctest::Approx(0.0));
  CHECK(r.volume.data()[2] == doctest::Approx(2.0 / s).epsilon(1e-6));
  CHECK(r.volume.data()[2] == doctest::Approx(1.224745).epsilon(1e-6));
  CHECK_FALSE(r.constant_region);
}

TEST_CASE("zscore_normalize: constant region is flagged") {
  const Volume v({4, 4, 4}, {1, 1, 1}, std::vector<float>(64, 0.0f));
  const NormalizeResult r = zscore_normalize(v, NormRegion::All);
  CHECK(r.constant_region);
  for (float x : r.volume.data()) CHECK(x == 0.0f);
  CHECK(zscore_normalize(v, NormRegion::NonzeroOnly).constant_region);
}

TEST_CASE("zscore_normalize: moments and idempotence") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(10.0f, 500.0f);
  std::vector<float> data(12 * 12 * 12, 0.0f);
  // nonzero "brain" block inside zero background
  for (int z = 2; z < 10; ++z)
    for (int y = 3; y < 9; ++y)
      for (int x = 1; x < 11; ++x) data[voxel_index({12, 12, 12}, x, y, z)] = u(rng);
  const Volume v({12, 12, 12}, {1, 1, 1}, data);
  for (NormRegion region : {NormRegion::All, NormRegion::NonzeroOnly}) {
    const Volume n = zscore_normalize(v, region).volume;
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (region == NormRegion::NonzeroOnly && data[i] == 0.0f) {
        CHECK(n.data()[i] == 0.0f);
        continue;
      }
      sum += n.data()[i];
      sq += static_cast<double>(n.data()[i]) * n.data()[i];
      ++count;
    }
    const double mean = sum / static_cast<double>(count);
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(sq / static_cast<double>(count) - mean * mean - 1.0) <= 1e-5);
  }
  const Volume once = zscore_normalize(v, NormRegion::All).volume;
  const Volume twice = zscore_normalize(once, NormRegion::All).volume;
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once.data()[i] - twice.data()[i]) <= 1e-5);
}

TEST_CASE("label remapping") {
  CHECK(remap_label(4.0f, LabelEncoding::Brats) == 3);
  CHECK(remap_label(0.0f, LabelEncoding::Brats) == 0);
  CHECK(remap_label(2.0f, LabelEncoding::Brats) == 2);
  CHECK_ERROR(remap_label(3.0f, LabelEncoding::Brats), ErrorCode::UnknownLabelValue);
  CHECK_ERROR(remap_label(1.5f, LabelEncoding::Brats), ErrorCode::UnknownLabelValue);
  CHECK(remap_label(3.0f, LabelEncoding::Internal) == 3);
  CHECK_ERROR(remap_label(4.0f, LabelEncoding::Internal), ErrorCode::UnknownLabelValue);
}

TEST_CASE("load_case through a manifest") {
  testutil::TempDir dir("case");
  const Dims3 d{4, 4, 3};
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(1.0f, 2.0f);
  for (const char* m : {"t1", "t1gd", "t2", "flair"}) {
    std::vector<float> v(d.count());
    for (auto& x : v) x = u(rng);
    write_volume(Volume(d, {1, 1, 1}, v), dir / (std::string("c0_") + m + ".raw"));
  }
  std::vector<float> lab(d.count(), 0.0f);
  lab[5] = 4.0f;
  lab[6] = 2.0f;
  write_volume(Volume(d, {1, 1, 1}, lab), dir / "c0_label.raw");
  write_bytes(dir / "manifest.json", R"({"label_encoding":"brats","cases":[{"case_id":"c0",
    "t1":"c0_t1.raw","t1gd":"c0_t1gd.raw","t2":"c0_t2.raw","flair":"c0_flair.raw","label":"c0_label.raw"}]})");
  const DatasetManifest man = read_manifest(dir / "manifest.json");
  const MultiModalCase c = load_case(man, "c0");
  REQUIRE(c.label.has_value());
  CHECK(c.label->labels[5] == 3);
  CHECK(c.label->labels[6] == 2);
  CHECK(c.label->labels[0] == 0);
  double mean = 0.0;
  for (float x : c.modality(Modality::T2).data()) mean += x;
  CHECK(std::abs(mean / static_cast<double>(d.count())) < 1e-6);
  CHECK_ERROR(load_case(man, "nope"), ErrorCode::DataError);

  write_volume(Volume({4, 4, 4}, {1, 1, 1}, std::vector<float>(64, 1.0f)), dir / "c0_t2.raw");
  CHECK_ERROR(load_case(man, "c0"), ErrorCode::DimsMismatch);

  write_bytes(dir / "m2.json", R"([{"case_id":"c1","t1":"a","t1gd":"b","t2":"c"}])");
  CHECK_ERROR(read_manifest(dir / "m2.json"), ErrorCode::MissingModality);
  write_bytes(dir / "m3.json",
              R"([{"case_id":"c1","t1":"a","t1gd":"b","t2":"c","flair":"d"},
                  {"case_id":"c1","t1":"a","t1gd":"b","t2":"c","flair":"d"}])");
  CHECK_ERROR(read_manifest(dir / "m3.json"), ErrorCode::DataError);
}

TEST_CASE("manifest write/read round trip") {
  testutil::TempDir dir("man");
  DatasetManifest m;
  m.label_encoding = LabelEncoding::Internal;
  ManifestEntry e;
  e.case_id = "p1";
  for (int i = 0; i < kModalityCount; ++i) e.modality_paths[i] = dir.path() / ("p1_" + std::to_string(i) + ".raw");
  e.label_path = dir.path() / "p1_label.raw";
  m.entries.push_back(e);
  write_manifest(m, dir / "m.json");
  const DatasetManifest r = read_manifest(dir / "m.json");
  REQUIRE(r.entries.size() == 1);
  CHECK(r.label_encoding == LabelEncoding::Internal);
  CHECK(std::filesystem::equivalent(r.entries[0].modality_paths[2].parent_path(), dir.path()));
  CHECK(r.entries[0].modality_paths[2].filename() == "p1_2.raw");
  CHECK(r.entries[0].label_path.has_value());
}

}  // TEST_SUITE
