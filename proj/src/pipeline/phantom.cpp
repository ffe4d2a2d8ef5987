#include "pipeline/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "augment/augment.hpp"
#include "common/error.hpp"
#include "io/dataset.hpp"
#include "io/raw.hpp"

namespace gliomaseg::pipeline {

namespace {

struct Ellipsoid {
  std::array<double, 3> centre{};
  std::array<double, 3> radius{};

  double level(double x, double y, double z) const {
    const double a = (x - centre[0]) / radius[0];
    const double b = (y - centre[1]) / radius[1];
    const double c = (z - centre[2]) / radius[2];
    return a * a + b * b + c * c;
  }
};

// Mean intensity per tissue (background, brain, necrotic, edema, enhancing)
// for T1, T1-Gd, T2, FLAIR.
constexpr std::array<std::array<double, io::kModalityCount>, 4> kTissue{{
    {0.60, 0.60, 0.50, 0.50},  // brain
    {0.30, 0.35, 0.95, 0.60},  // necrotic
    {0.50, 0.55, 0.90, 1.00},  // edema
    {0.55, 1.00, 0.75, 0.80},  // enhancing
}};

double uniform(std::mt19937_64& rng, const std::array<double, 2>& range) {
  return std::uniform_real_distribution<double>(range[0], range[1])(rng);
}

}  // namespace

std::string phantom_case_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03d", index);
  return buf;
}

io::MultiModalCase phantom_case(const PhantomSpec& spec, int index) {
  const io::Dims3 d = spec.dims;
  std::seed_seq seq{static_cast<std::uint64_t>(spec.seed), static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Ellipsoid brain;
  for (int a = 0; a < 3; ++a) {
    const double half = 0.5 * d[a];
    brain.centre[a] = half - 0.5 + std::uniform_real_distribution<double>(-0.05, 0.05)(rng) * half;
    brain.radius[a] = uniform(rng, spec.brain_radius) * half;
  }

  Ellipsoid edema;
  for (int a = 0; a < 3; ++a) edema.radius[a] = std::min(uniform(rng, spec.edema_radius), 0.45 * brain.radius[a]);
  // Tumor centre: inside the brain far enough that the edema stays within it.
  for (int a = 0; a < 3; ++a) {
    const double room = std::max(0.0, brain.radius[a] - edema.radius[a] - 1.0) * 0.6;
    edema.centre[a] = brain.centre[a] + std::uniform_real_distribution<double>(-room, room)(rng);
  }
  Ellipsoid core = edema;
  Ellipsoid necrosis = edema;
  const double cf = uniform(rng, spec.core_fraction);
  const double nf = uniform(rng, spec.necrosis_fraction);
  for (int a = 0; a < 3; ++a) {
    // Off-centre core so the edema is not a uniform-thickness shell.
    core.radius[a] = edema.radius[a] * cf;
    const double slack = edema.radius[a] - core.radius[a];
    core.centre[a] = edema.centre[a] + std::uniform_real_distribution<double>(-0.4, 0.4)(rng) * slack;
    necrosis.radius[a] = core.radius[a] * nf;
    necrosis.centre[a] = core.centre[a];
  }

  std::array<double, io::kModalityCount> gain{};
  for (auto& g : gain) g = std::uniform_real_distribution<double>(0.85, 1.15)(rng);

  // Smooth tissue texture shared by all modalities.
  std::vector<float> texture(d.count());
  for (auto& t : texture) t = static_cast<float>(gauss(rng));
  texture = augment::gaussian_filter_3d(texture, d, 1.5);

  io::LabelVolume label{d, {1.0, 1.0, 1.0}, std::vector<std::uint8_t>(d.count(), 0)};
  std::array<std::vector<float>, io::kModalityCount> img;
  for (auto& m : img) m.assign(d.count(), 0.0f);

  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const std::size_t i = io::voxel_index(d, x, y, z);
        if (brain.level(x, y, z) > 1.0) continue;
        int tissue = 0;
        std::uint8_t lab = 0;
        if (necrosis.level(x, y, z) <= 1.0) {
          tissue = 1;
          lab = 1;
        } else if (core.level(x, y, z) <= 1.0) {
          tissue = 3;
          lab = 3;
        } else if (edema.level(x, y, z) <= 1.0) {
          tissue = 2;
          lab = 2;
        }
        label.labels[i] = lab;
        for (int m = 0; m < io::kModalityCount; ++m) {
          const double v = gain[m] * (kTissue[tissue][m] + 0.15 * texture[i]) + spec.noise * gauss(rng);
          img[m][i] = static_cast<float>(std::max(v, 1e-3));
        }
      }
    }
  }

  io::MultiModalCase c;
  c.case_id = phantom_case_id(index);
  for (int m = 0; m < io::kModalityCount; ++m) {
    c.modalities[m] = io::Volume(d, {1.0, 1.0, 1.0}, std::move(img[m]), io::modality_key(static_cast<io::Modality>(m)));
  }
  c.label = std::move(label);
  return c;
}

std::filesystem::path phantom_generate(const PhantomSpec& spec, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  io::DatasetManifest manifest;
  manifest.label_encoding = io::LabelEncoding::Brats;
  for (int i = 0; i < spec.count; ++i) {
    const io::MultiModalCase c = phantom_case(spec, i);
    io::ManifestEntry e;
    e.case_id = c.case_id;
    for (int m = 0; m < io::kModalityCount; ++m) {
      const std::string file = c.case_id + "_" + io::modality_key(static_cast<io::Modality>(m)) + ".raw";
      io::write_volume(c.modalities[m], out_dir / file);
      e.modality_paths[m] = out_dir / file;
    }
    const std::string label_file = c.case_id + "_seg.raw";
    io::write_volume(io::labels_to_volume(*c.label, io::LabelEncoding::Brats), out_dir / label_file);
    e.label_path = out_dir / label_file;
    manifest.entries.push_back(std::move(e));
  }
  const auto path = out_dir / "manifest.json";
  io::write_manifest(manifest, path);
  return path;
}

}  // namespace gliomaseg::pipeline
