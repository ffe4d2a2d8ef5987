#include "losses/metrics.hpp"

#include "common/error.hpp"

namespace gliomaseg::losses {

const char* region_name(Region r) {
  switch (r) {
    case Region::Whole: return "whole";
    case Region::Core: return "core";
    case Region::Enhancing: return "enh";
  }
  return "?";
}

bool in_region(std::uint8_t label, Region r) {
  switch (r) {
    case Region::Whole: return label >= 1 && label <= 3;
    case Region::Core: return label == 1 || label == 3;
    case Region::Enhancing: return label == 3;
  }
  return false;
}

double dice_metric(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorCode::GridMismatch, "dice: " + std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
                                      " voxels");
  }
  std::size_t both = 0, p = 0, t = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred[i] != 0;
    const bool b = truth[i] != 0;
    p += a;
    t += b;
    both += a && b;
  }
  if (p + t == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

double region_dice(const io::LabelVolume& pred, const io::LabelVolume& truth, Region region) {
  if (!(pred.dims == truth.dims) || pred.labels.size() != truth.labels.size()) {
    fail(ErrorCode::GridMismatch, "region dice on different grids");
  }
  std::vector<std::uint8_t> a(pred.labels.size()), b(truth.labels.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = in_region(pred.labels[i], region);
    b[i] = in_region(truth.labels[i], region);
  }
  return dice_metric(a, b);
}

CaseReport case_report(const io::LabelVolume& pred, const io::LabelVolume& truth, std::string case_id) {
  CaseReport r;
  r.case_id = std::move(case_id);
  r.whole = region_dice(pred, truth, Region::Whole);
  r.core = region_dice(pred, truth, Region::Core);
  r.enh = region_dice(pred, truth, Region::Enhancing);
  r.mean = (r.whole + r.core + r.enh) / 3.0;
  return r;
}

AggregateReport aggregate(std::vector<CaseReport> cases) {
  AggregateReport out;
  out.mean.case_id = "mean";
  if (!cases.empty()) {
    for (const auto& c : cases) {
      out.mean.whole += c.whole;
      out.mean.core += c.core;
      out.mean.enh += c.enh;
      out.mean.mean += c.mean;
    }
    const double n = static_cast<double>(cases.size());
    out.mean.whole /= n;
    out.mean.core /= n;
    out.mean.enh /= n;
    out.mean.mean /= n;
  }
  out.cases = std::move(cases);
  return out;
}

}  // namespace gliomaseg::losses
