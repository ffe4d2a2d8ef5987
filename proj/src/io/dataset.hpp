#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "io/normalize.hpp"
#include "io/volume.hpp"

namespace gliomaseg::io {

/// How label files encode the tumor classes on disk.
enum class LabelEncoding {
  Brats,     // {0, 1, 2, 4}; 4 (enhancing) maps to internal 3
  Internal,  // {0, 1, 2, 3}
};

struct ManifestEntry {
  std::string case_id;
  std::array<std::filesystem::path, kModalityCount> modality_paths;
  std::optional<std::filesystem::path> label_path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  LabelEncoding label_encoding = LabelEncoding::Brats;

  const ManifestEntry& find(const std::string& case_id) const;
};

/// Manifest JSON: either {"label_encoding": "brats"|"internal", "cases": [...]}
/// or a bare list of case records. Each record has "case_id", "t1", "t1gd",
/// "t2", "flair" and optionally "label". Relative paths resolve against the
/// manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Maps one on-disk label value to the internal alphabet; throws
/// UnknownLabelValue for anything outside the declared encoding.
std::uint8_t remap_label(float value, LabelEncoding encoding);

LabelVolume labels_from_volume(const Volume& volume, LabelEncoding encoding);
Volume labels_to_volume(const LabelVolume& labels, LabelEncoding encoding);

/// Reads, validates and per-modality normalizes one case.
MultiModalCase load_case(const DatasetManifest& manifest, const std::string& case_id,
                         NormRegion region = NormRegion::NonzeroOnly);

}  // namespace gliomaseg::io
