#include "pipeline/outputs.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>

#include "common/error.hpp"
#include "io/raw.hpp"

namespace gliomaseg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prediction_path(const fs::path& dir, const std::string& case_id) { return dir / (case_id + "_pred.raw"); }
fs::path confidence_path(const fs::path& dir, const std::string& case_id) { return dir / (case_id + "_conf.raw"); }
fs::path crop_record_path(const fs::path& dir, const std::string& case_id) { return dir / (case_id + "_crop.json"); }

void write_prediction(const CasePrediction& p, const io::Spacing3& spacing, io::LabelEncoding encoding,
                      const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());
  io::LabelVolume mask = p.mask;
  mask.spacing = spacing;
  io::write_volume(io::labels_to_volume(mask, encoding), prediction_path(dir, p.case_id));
  io::write_volume(io::Volume(p.mask.dims, spacing, p.confidence, "confidence"), confidence_path(dir, p.case_id));
  json rec = p.record.to_json();
  rec["roi_fallback"] = p.roi_fallback;
  std::ofstream out(crop_record_path(dir, p.case_id), std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write crop record for " + p.case_id);
  out << rec.dump(2) << '\n';
}

namespace {

losses::CaseReport evaluate_entry(const io::ManifestEntry& e, io::LabelEncoding encoding, const fs::path& dir) {
  if (!e.label_path) fail(ErrorCode::DataError, e.case_id + " has no ground-truth label");
  const fs::path pred_file = prediction_path(dir, e.case_id);
  if (!fs::exists(pred_file)) fail(ErrorCode::MissingPrediction, "no prediction for " + e.case_id);
  const io::LabelVolume truth = io::labels_from_volume(io::read_volume(*e.label_path), encoding);
  const io::LabelVolume pred = io::labels_from_volume(io::read_volume(pred_file), encoding);
  if (!(truth.dims == pred.dims)) fail(ErrorCode::GridMismatch, e.case_id + ": prediction grid differs from truth");
  return losses::case_report(pred, truth, e.case_id);
}

}  // namespace

losses::AggregateReport evaluate(const io::DatasetManifest& manifest, const fs::path& predictions_dir,
                                 const std::vector<std::string>& case_ids) {
  std::vector<const io::ManifestEntry*> entries;
  if (case_ids.empty()) {
    for (const auto& e : manifest.entries) {
      if (e.label_path) entries.push_back(&e);
    }
  } else {
    for (const auto& id : case_ids) entries.push_back(&manifest.find(id));
  }
  std::vector<losses::CaseReport> reports(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(entries.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      reports[k] = evaluate_entry(*entries[k], manifest.label_encoding, predictions_dir);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return losses::aggregate(std::move(reports));
}

namespace {

json case_json(const losses::CaseReport& r) {
  return {{"case_id", r.case_id}, {"whole", r.whole}, {"core", r.core}, {"enh", r.enh}, {"mean", r.mean}};
}

losses::CaseReport case_from(const json& j) {
  losses::CaseReport r;
  r.case_id = j.value("case_id", std::string());
  r.whole = j.at("whole").get<double>();
  r.core = j.at("core").get<double>();
  r.enh = j.at("enh").get<double>();
  r.mean = j.at("mean").get<double>();
  return r;
}

}  // namespace

json report_json(const losses::AggregateReport& report) {
  json cases = json::array();
  for (const auto& c : report.cases) cases.push_back(case_json(c));
  json mean = case_json(report.mean);
  mean.erase("case_id");
  return {{"cases", cases}, {"mean", mean}};
}

losses::AggregateReport report_from_json(const json& j) {
  std::vector<losses::CaseReport> cases;
  try {
    for (const auto& c : j.at("cases")) cases.push_back(case_from(c));
  } catch (const json::exception& e) {
    fail(ErrorCode::DataError, std::string("report: ") + e.what());
  }
  return losses::aggregate(std::move(cases));
}

std::size_t nearest_rank(double percentile, std::size_t n) {
  if (n == 0) fail(ErrorCode::DataError, "percentile of an empty report");
  const double rank = std::ceil(percentile / 100.0 * static_cast<double>(n));
  const auto idx = static_cast<std::ptrdiff_t>(rank) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

void write_png(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    fail(ErrorCode::LengthMismatch, "png buffer size does not match the image");
  }
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (fp == nullptr) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoFailure, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr std::array<Rgb, 4> kLabelColour{{{0, 0, 0}, {220, 40, 40}, {40, 200, 60}, {250, 220, 40}}};
constexpr int kGap = 2;

struct Panel {
  int w = 0, h = 0;
  std::vector<Rgb> px;
};

// Mid axial slice, y rows top to bottom.
Panel gray_panel(std::span<const float> v, const io::Dims3& d) {
  Panel p{d.x, d.y, std::vector<Rgb>(static_cast<std::size_t>(d.x) * d.y)};
  const int z = d.z / 2;
  float lo = v[io::voxel_index(d, 0, 0, z)], hi = lo;
  for (int y = 0; y < d.y; ++y) {
    for (int x = 0; x < d.x; ++x) {
      const float s = v[io::voxel_index(d, x, y, z)];
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  const float span = hi > lo ? hi - lo : 1.0f;
  for (int y = 0; y < d.y; ++y) {
    for (int x = 0; x < d.x; ++x) {
      const auto g = static_cast<std::uint8_t>(std::lround(255.0f * (v[io::voxel_index(d, x, y, z)] - lo) / span));
      p.px[static_cast<std::size_t>(y) * d.x + x] = {g, g, g};
    }
  }
  return p;
}

Panel label_panel(const io::LabelVolume& l) {
  const io::Dims3& d = l.dims;
  Panel p{d.x, d.y, std::vector<Rgb>(static_cast<std::size_t>(d.x) * d.y)};
  const int z = d.z / 2;
  for (int y = 0; y < d.y; ++y) {
    for (int x = 0; x < d.x; ++x) p.px[static_cast<std::size_t>(y) * d.x + x] = kLabelColour[l.at(x, y, z) & 3];
  }
  return p;
}

// Confidence normalized with the volume's own min/max, so panels compare
// shapes rather than absolute energies.
Panel confidence_panel(std::span<const float> v, const io::Dims3& d) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const float lo = *mn, span = *mx > *mn ? *mx - *mn : 1.0f;
  Panel p{d.x, d.y, std::vector<Rgb>(static_cast<std::size_t>(d.x) * d.y)};
  const int z = d.z / 2;
  for (int y = 0; y < d.y; ++y) {
    for (int x = 0; x < d.x; ++x) {
      const float t = (v[io::voxel_index(d, x, y, z)] - lo) / span;
      const auto r = static_cast<std::uint8_t>(std::lround(255.0f * t));
      const auto b = static_cast<std::uint8_t>(255 - r);
      p.px[static_cast<std::size_t>(y) * d.x + x] = {r, static_cast<std::uint8_t>(r / 2), b};
    }
  }
  return p;
}

struct Canvas {
  int w = 0, h = 0;
  std::vector<std::uint8_t> rgb;

  Canvas(int width, int height) : w(width), h(height), rgb(static_cast<std::size_t>(width) * height * 3, 255) {}

  void blit(const Panel& p, int ox, int oy) {
    for (int y = 0; y < p.h; ++y) {
      for (int x = 0; x < p.w; ++x) {
        const Rgb& c = p.px[static_cast<std::size_t>(y) * p.w + x];
        std::copy(c.begin(), c.end(), rgb.begin() + (static_cast<std::ptrdiff_t>(oy + y) * w + ox + x) * 3);
      }
    }
  }
};

std::vector<Panel> case_panels(const io::ManifestEntry& e, io::LabelEncoding enc, const fs::path& pred_dir) {
  const io::Volume flair = io::read_volume(e.modality_paths[static_cast<int>(io::Modality::FLAIR)]);
  const io::Volume t1gd = io::read_volume(e.modality_paths[static_cast<int>(io::Modality::T1GD)]);
  const io::Dims3 d = flair.dims();
  std::vector<Panel> out{gray_panel(flair.data(), d), gray_panel(t1gd.data(), d)};
  const fs::path pred = prediction_path(pred_dir, e.case_id);
  if (!fs::exists(pred)) fail(ErrorCode::MissingPrediction, "no prediction for " + e.case_id);
  out.push_back(label_panel(io::labels_from_volume(io::read_volume(pred), enc)));
  if (e.label_path) {
    out.push_back(label_panel(io::labels_from_volume(io::read_volume(*e.label_path), enc)));
  } else {
    out.push_back(Panel{d.x, d.y, std::vector<Rgb>(static_cast<std::size_t>(d.x) * d.y, Rgb{0, 0, 0})});
  }
  const fs::path conf = confidence_path(pred_dir, e.case_id);
  if (fs::exists(conf)) {
    const io::Volume c = io::read_volume(conf);
    out.push_back(confidence_panel(c.data(), c.dims()));
  } else {
    out.push_back(Panel{d.x, d.y, std::vector<Rgb>(static_cast<std::size_t>(d.x) * d.y, Rgb{0, 0, 0})});
  }
  for (const auto& p : out) {
    if (p.w != d.x || p.h != d.y) fail(ErrorCode::GridMismatch, e.case_id + ": panel grids differ");
  }
  return out;
}

}  // namespace

std::vector<PercentileRow> percentile_report(const losses::AggregateReport& report,
                                             const io::DatasetManifest& manifest, const fs::path& predictions_dir,
                                             const fs::path& out_dir) {
  std::vector<losses::CaseReport> ranked = report.cases;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const losses::CaseReport& a, const losses::CaseReport& b) { return a.mean < b.mean; });
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir.string());

  std::vector<PercentileRow> rows;
  std::vector<std::vector<Panel>> panels;
  for (double pct : {0.0, 25.0, 50.0, 75.0, 100.0}) {
    const losses::CaseReport& r = ranked[nearest_rank(pct, ranked.size())];
    auto row_panels = case_panels(manifest.find(r.case_id), manifest.label_encoding, predictions_dir);
    const int pw = row_panels[0].w, ph = row_panels[0].h;
    Canvas canvas(5 * pw + 4 * kGap, ph);
    for (int i = 0; i < 5; ++i) canvas.blit(row_panels[static_cast<std::size_t>(i)], i * (pw + kGap), 0);
    char name[64];
    std::snprintf(name, sizeof name, "p%03d_%s.png", static_cast<int>(pct), r.case_id.c_str());
    const fs::path image = out_dir / name;
    write_png(image, canvas.w, canvas.h, canvas.rgb);
    rows.push_back({pct, r.case_id, r.mean, image});
    panels.push_back(std::move(row_panels));
  }

  int width = 0, height = 0;
  for (const auto& p : panels) {
    width = std::max(width, 5 * p[0].w + 4 * kGap);
    height += p[0].h + kGap;
  }
  Canvas montage(width, height - kGap);
  int oy = 0;
  for (const auto& p : panels) {
    for (int i = 0; i < 5; ++i) montage.blit(p[static_cast<std::size_t>(i)], i * (p[0].w + kGap), oy);
    oy += p[0].h + kGap;
  }
  write_png(out_dir / "percentiles.png", montage.w, montage.h, montage.rgb);

  json index = json::array();
  for (const auto& r : rows) {
    index.push_back({{"percentile", r.percentile}, {"case_id", r.case_id}, {"mean", r.mean_dice},
                     {"image", r.image.filename().string()}});
  }
  std::ofstream out(out_dir / "percentiles.json", std::ios::trunc);
  out << index.dump(2) << '\n';
  return rows;
}

}  // namespace gliomaseg::pipeline
