#include "io/nifti.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"
#include "io/endian.hpp"

namespace gliomaseg::io {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDefaultVoxOffset = 352;

// Field offsets within the NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffSrowX = 280;
constexpr std::size_t kOffMagic = 344;

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

std::size_t datatype_bytes(std::int16_t code) {
  switch (code) {
    case kDtUint8: return 1;
    case kDtInt16: return 2;
    case kDtFloat32: return 4;
    case kDtFloat64: return 8;
    default: fail(ErrorCode::UnsupportedDatatype, "NIfTI datatype code " + std::to_string(code));
  }
}

double decode_voxel(const std::uint8_t* p, std::int16_t code) {
  switch (code) {
    case kDtUint8: return static_cast<double>(p[0]);
    case kDtInt16: return static_cast<double>(load_le<std::int16_t>(p));
    case kDtFloat32: return static_cast<double>(load_le<float>(p));
    case kDtFloat64: return load_le<double>(p);
    default: return 0.0;
  }
}

}  // namespace

Volume read_nifti(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderSize) {
    fail(ErrorCode::TruncatedPayload, path.string() + ": shorter than a NIfTI-1 header");
  }
  const std::uint8_t* h = bytes.data();
  if (std::memcmp(h + kOffMagic, "n+1\0", 4) != 0) {
    fail(ErrorCode::BadMagic, path.string() + ": expected single-file NIfTI-1 magic \"n+1\"");
  }
  if (load_le<std::int32_t>(h + kOffSizeofHdr) != static_cast<std::int32_t>(kHeaderSize)) {
    fail(ErrorCode::BadMagic, path.string() + ": sizeof_hdr is not 348 (big-endian files are unsupported)");
  }

  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = load_le<std::int16_t>(h + kOffDim + 2 * i);
  if (dim[0] < 1 || dim[0] > 7) fail(ErrorCode::UnsupportedLayout, path.string() + ": invalid dim[0]");
  Dims3 dims{1, 1, 1};
  for (int a = 0; a < 3 && a < dim[0]; ++a) {
    if (dim[a + 1] < 1) fail(ErrorCode::UnsupportedLayout, path.string() + ": non-positive extent");
    dims[a] = dim[a + 1];
  }
  for (int a = 4; a <= dim[0]; ++a) {
    if (dim[a] > 1) fail(ErrorCode::UnsupportedLayout, path.string() + ": only 3D volumes are supported");
  }

  const auto datatype = load_le<std::int16_t>(h + kOffDatatype);
  const std::size_t bpv = datatype_bytes(datatype);

  Spacing3 spacing{1.0, 1.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    const float pd = load_le<float>(h + kOffPixdim + 4 * (a + 1));
    if (a < dim[0] && std::isfinite(pd) && pd > 0.0f) spacing[a] = pd;
  }

  const float vox_offset_f = load_le<float>(h + kOffVoxOffset);
  const std::size_t vox_offset =
      vox_offset_f >= static_cast<float>(kHeaderSize) ? static_cast<std::size_t>(vox_offset_f) : kDefaultVoxOffset;
  const std::size_t n = dims.count();
  if (bytes.size() < vox_offset || bytes.size() - vox_offset < n * bpv) {
    fail(ErrorCode::TruncatedPayload, path.string() + ": payload shorter than dims imply");
  }

  const float slope = load_le<float>(h + kOffSclSlope);
  const float inter = load_le<float>(h + kOffSclInter);
  const bool scaled = slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && (inter == 0.0f || !std::isfinite(inter)));

  std::vector<float> data(n);
  const std::uint8_t* payload = bytes.data() + vox_offset;
  for (std::size_t i = 0; i < n; ++i) {
    double v = decode_voxel(payload + i * bpv, datatype);
    if (scaled) v = v * static_cast<double>(slope) + static_cast<double>(std::isfinite(inter) ? inter : 0.0f);
    data[i] = static_cast<float>(v);
    if (!std::isfinite(data[i])) {
      fail(ErrorCode::NonFiniteVoxel, path.string() + ": non-finite voxel at index " + std::to_string(i));
    }
  }
  return Volume(dims, spacing, std::move(data), path.filename().string());
}

void write_nifti(const Volume& volume, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(kDefaultVoxOffset + volume.size() * 4, 0);
  std::uint8_t* h = out.data();
  store_le<std::int32_t>(h + kOffSizeofHdr, static_cast<std::int32_t>(kHeaderSize));
  const Dims3& d = volume.dims();
  const std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(d.x), static_cast<std::int16_t>(d.y),
                                        static_cast<std::int16_t>(d.z), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store_le<std::int16_t>(h + kOffDim + 2 * i, dim[i]);
  store_le<std::int16_t>(h + kOffDatatype, kDtFloat32);
  store_le<std::int16_t>(h + kOffBitpix, 32);
  const auto& sp = volume.spacing();
  std::array<float, 8> pixdim{1.0f, static_cast<float>(sp[0]), static_cast<float>(sp[1]),
                              static_cast<float>(sp[2]), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) store_le<float>(h + kOffPixdim + 4 * i, pixdim[i]);
  store_le<float>(h + kOffVoxOffset, static_cast<float>(kDefaultVoxOffset));
  store_le<float>(h + kOffSclSlope, 1.0f);
  store_le<float>(h + kOffSclInter, 0.0f);
  h[kOffXyztUnits] = 2;  // millimetres
  store_le<std::int16_t>(h + kOffQformCode, 0);
  store_le<std::int16_t>(h + kOffSformCode, 1);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const float v = (r == c) ? pixdim[r + 1] : 0.0f;
      store_le<float>(h + kOffSrowX + 16 * r + 4 * c, v);
    }
  }
  std::memcpy(h + kOffMagic, "n+1\0", 4);

  auto data = volume.data();
  for (std::size_t i = 0; i < data.size(); ++i) store_le<float>(h + kDefaultVoxOffset + 4 * i, data[i]);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace gliomaseg::io
