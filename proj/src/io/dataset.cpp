#include "io/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "common/error.hpp"
#include "io/raw.hpp"

namespace gliomaseg::io {

namespace fs = std::filesystem;

const ManifestEntry& DatasetManifest::find(const std::string& case_id) const {
  for (const auto& e : entries) {
    if (e.case_id == case_id) return e;
  }
  fail(ErrorCode::DataError, "case '" + case_id + "' not in manifest");
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::DataError, "manifest " + path.string() + ": " + e.what());
  }

  DatasetManifest m;
  const nlohmann::json* cases = &j;
  if (j.is_object()) {
    const std::string enc = j.value("label_encoding", "brats");
    if (enc == "brats") {
      m.label_encoding = LabelEncoding::Brats;
    } else if (enc == "internal") {
      m.label_encoding = LabelEncoding::Internal;
    } else {
      fail(ErrorCode::DataError, "manifest: unknown label_encoding '" + enc + "'");
    }
    if (!j.contains("cases")) fail(ErrorCode::DataError, "manifest: missing \"cases\"");
    cases = &j.at("cases");
  }
  if (!cases->is_array()) fail(ErrorCode::DataError, "manifest: cases must be a list");

  const fs::path base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  std::set<std::string> seen;
  for (const auto& rec : *cases) {
    ManifestEntry e;
    e.case_id = rec.value("case_id", "");
    if (e.case_id.empty()) fail(ErrorCode::DataError, "manifest: record without case_id");
    if (!seen.insert(e.case_id).second) fail(ErrorCode::DataError, "manifest: duplicate case_id " + e.case_id);
    for (int k = 0; k < kModalityCount; ++k) {
      const char* key = modality_key(static_cast<Modality>(k));
      const std::string p = rec.value(key, "");
      if (p.empty()) fail(ErrorCode::MissingModality, "case " + e.case_id + ": no path for " + key);
      e.modality_paths[k] = resolve(p);
    }
    if (rec.contains("label")) {
      const std::string p = rec.at("label").get<std::string>();
      if (p.empty()) fail(ErrorCode::DataError, "case " + e.case_id + ": empty label path");
      e.label_path = resolve(p);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  const auto rel = [&](const fs::path& p) { return fs::relative(p, base.empty() ? fs::path(".") : base).string(); };
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json rec = {{"case_id", e.case_id}};
    for (int k = 0; k < kModalityCount; ++k) rec[modality_key(static_cast<Modality>(k))] = rel(e.modality_paths[k]);
    if (e.label_path) rec["label"] = rel(*e.label_path);
    cases.push_back(std::move(rec));
  }
  nlohmann::json j = {{"label_encoding", manifest.label_encoding == LabelEncoding::Brats ? "brats" : "internal"},
                      {"cases", std::move(cases)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << j.dump(2) << '\n';
}

std::uint8_t remap_label(float value, LabelEncoding encoding) {
  const float r = std::round(value);
  if (r != value) fail(ErrorCode::UnknownLabelValue, "non-integral label value " + std::to_string(value));
  const int v = static_cast<int>(r);
  if (encoding == LabelEncoding::Brats) {
    switch (v) {
      case 0: return 0;
      case 1: return 1;
      case 2: return 2;
      case 4: return 3;
      default: break;
    }
  } else if (v >= 0 && v <= 3) {
    return static_cast<std::uint8_t>(v);
  }
  fail(ErrorCode::UnknownLabelValue, "label value " + std::to_string(v) + " outside the declared encoding");
}

LabelVolume labels_from_volume(const Volume& volume, LabelEncoding encoding) {
  LabelVolume out{volume.dims(), volume.spacing(), {}};
  out.labels.reserve(volume.size());
  for (float v : volume.data()) out.labels.push_back(remap_label(v, encoding));
  return out;
}

Volume labels_to_volume(const LabelVolume& labels, LabelEncoding encoding) {
  std::vector<float> data(labels.labels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int v = labels.labels[i];
    data[i] = static_cast<float>(encoding == LabelEncoding::Brats && v == 3 ? 4 : v);
  }
  return Volume(labels.dims, labels.spacing, std::move(data));
}

MultiModalCase load_case(const DatasetManifest& manifest, const std::string& case_id, NormRegion region) {
  const ManifestEntry& e = manifest.find(case_id);
  MultiModalCase c;
  c.case_id = case_id;
  for (int k = 0; k < kModalityCount; ++k) {
    if (!fs::exists(e.modality_paths[k])) {
      fail(ErrorCode::MissingModality, "case " + case_id + ": " + e.modality_paths[k].string() + " not found");
    }
    c.modalities[k] = zscore_normalize(read_volume(e.modality_paths[k]), region).volume;
  }
  if (e.label_path) c.label = labels_from_volume(read_volume(*e.label_path), manifest.label_encoding);
  c.validate();
  return c;
}

}  // namespace gliomaseg::io
