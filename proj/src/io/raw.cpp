#include "io/raw.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "common/error.hpp"
#include "io/endian.hpp"
#include "io/nifti.hpp"

namespace gliomaseg::io {

namespace {

Volume parse_raw(const std::vector<std::uint8_t>& bytes, const nlohmann::json& side, const std::string& name) {
  Dims3 dims;
  Spacing3 spacing{1.0, 1.0, 1.0};
  try {
    const auto& jd = side.at("dims");
    if (!jd.is_array() || jd.size() != 3) throw std::runtime_error("dims must have 3 entries");
    for (int a = 0; a < 3; ++a) {
      dims[a] = jd.at(a).get<int>();
      if (dims[a] < 1) throw std::runtime_error("dims must be >= 1");
    }
    if (side.contains("dtype") && side.at("dtype").get<std::string>() != "f32") {
      throw std::runtime_error("dtype must be \"f32\"");
    }
    if (side.contains("spacing")) {
      const auto& js = side.at("spacing");
      if (!js.is_array() || js.size() != 3) throw std::runtime_error("spacing must have 3 entries");
      for (int a = 0; a < 3; ++a) spacing[a] = js.at(a).get<double>();
    }
  } catch (const std::exception& e) {
    fail(ErrorCode::SidecarParse, name + ": " + e.what());
  }
  const std::size_t n = dims.count();
  if (bytes.size() != 4 * n) {
    fail(ErrorCode::LengthMismatch, name + ": payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                        std::to_string(4 * n));
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = load_le<float>(bytes.data() + 4 * i);
  return Volume(dims, spacing, std::move(data), name);
}

}  // namespace

Volume read_raw(const std::filesystem::path& data_path, const std::filesystem::path& sidecar_path) {
  std::ifstream side_in(sidecar_path);
  if (!side_in) fail(ErrorCode::IoFailure, "cannot open " + sidecar_path.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(side_in);
  } catch (const std::exception& e) {
    fail(ErrorCode::SidecarParse, sidecar_path.string() + ": " + e.what());
  }
  if (!side.is_object()) fail(ErrorCode::SidecarParse, sidecar_path.string() + ": not a JSON object");

  std::ifstream in(data_path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + data_path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_raw(bytes, side, data_path.filename().string());
}

void write_raw(const Volume& volume, const std::filesystem::path& data_path,
               const std::filesystem::path& sidecar_path) {
  auto data = volume.data();
  std::vector<std::uint8_t> bytes(4 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) store_le<float>(bytes.data() + 4 * i, data[i]);
  {
    std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + data_path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + data_path.string());
  }
  const Dims3& d = volume.dims();
  nlohmann::json side = {{"dims", {d.x, d.y, d.z}},
                         {"dtype", "f32"},
                         {"spacing", {volume.spacing()[0], volume.spacing()[1], volume.spacing()[2]}}};
  std::ofstream sout(sidecar_path, std::ios::trunc);
  if (!sout) fail(ErrorCode::IoFailure, "cannot create " + sidecar_path.string());
  sout << side.dump(2) << '\n';
  if (!sout) fail(ErrorCode::IoFailure, "write failed for " + sidecar_path.string());
}

std::filesystem::path sidecar_for(const std::filesystem::path& data_path) {
  auto p = data_path;
  p.replace_extension(".json");
  return p;
}

Volume read_volume(const std::filesystem::path& path) {
  if (path.extension() == ".nii") return read_nifti(path);
  return read_raw(path, sidecar_for(path));
}

void write_volume(const Volume& volume, const std::filesystem::path& path) {
  if (path.extension() == ".nii") {
    write_nifti(volume, path);
  } else {
    write_raw(volume, path, sidecar_for(path));
  }
}

}  // namespace gliomaseg::io
