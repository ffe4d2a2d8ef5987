#pragma once

#include <filesystem>

#include "io/volume.hpp"

namespace gliomaseg::io {

/// Reads an uncompressed single-file NIfTI-1 volume ("n+1" magic). Supported
/// datatypes: uint8, int16, float32, float64. scl_slope/scl_inter are applied
/// when the slope is non-zero.
Volume read_nifti(const std::filesystem::path& path);

/// Writes a float32 NIfTI-1 file with an identity-scaled, spacing-diagonal
/// sform.
void write_nifti(const Volume& volume, const std::filesystem::path& path);

}  // namespace gliomaseg::io
