#pragma once

#include <filesystem>

#include "io/volume.hpp"

namespace gliomaseg::io {

// Raw payload: little-endian float32, x-fastest. Sidecar: JSON object
// {"dims":[nx,ny,nz], "dtype":"f32", "spacing":[sx,sy,sz]}.

Volume read_raw(const std::filesystem::path& data_path, const std::filesystem::path& sidecar_path);
void write_raw(const Volume& volume, const std::filesystem::path& data_path,
               const std::filesystem::path& sidecar_path);

/// Sidecar path convention used by the pipeline: "<stem>.json" next to the payload.
std::filesystem::path sidecar_for(const std::filesystem::path& data_path);

/// Dispatches on extension: ".nii" reads NIfTI, anything else the raw format
/// with its conventional sidecar.
Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& volume, const std::filesystem::path& path);

}  // namespace gliomaseg::io
