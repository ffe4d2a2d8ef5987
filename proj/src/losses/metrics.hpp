#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "io/volume.hpp"

namespace gliomaseg::losses {

enum class Region { Whole, Core, Enhancing };
inline constexpr std::array<Region, 3> kRegions{Region::Whole, Region::Core, Region::Enhancing};

const char* region_name(Region r);
/// Whole = {1, 2, 3}, Core = {1, 3}, Enhancing = {3}.
bool in_region(std::uint8_t label, Region r);

/// 2|P and T| / (|P| + |T|); 1 when both masks are empty.
double dice_metric(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

double region_dice(const io::LabelVolume& pred, const io::LabelVolume& truth, Region region);

struct CaseReport {
  std::string case_id;
  double whole = 0.0;
  double core = 0.0;
  double enh = 0.0;
  double mean = 0.0;
};

CaseReport case_report(const io::LabelVolume& pred, const io::LabelVolume& truth, std::string case_id = {});

struct AggregateReport {
  std::vector<CaseReport> cases;
  CaseReport mean;  // column means; mean.mean is the mean of per-case means
};

AggregateReport aggregate(std::vector<CaseReport> cases);

}  // namespace gliomaseg::losses
