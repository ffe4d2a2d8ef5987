#pragma once

#include <filesystem>
#include <string>

#include "io/volume.hpp"
#include "pipeline/config.hpp"

namespace gliomaseg::pipeline {

/// Case `index` of the phantom set: a brain ellipsoid holding a tumor made of
/// nested ellipsoids, necrotic core (1) inside an enhancing shell (3) inside
/// edema (2). Intensities are raw (not normalized); background is exactly 0.
io::MultiModalCase phantom_case(const PhantomSpec& spec, int index);

std::string phantom_case_id(int index);

/// Writes spec.count cases as raw volumes plus manifest.json (labels in the
/// BraTS encoding) and returns the manifest path.
std::filesystem::path phantom_generate(const PhantomSpec& spec, const std::filesystem::path& out_dir);

}  // namespace gliomaseg::pipeline
