#include "pipeline/config.hpp"

#include <fstream>

#include "common/error.hpp"
#include "losses/losses.hpp"

namespace gliomaseg::pipeline {

using nlohmann::json;

namespace {

json dims_json(const io::Dims3& d) { return json::array({d.x, d.y, d.z}); }

io::Dims3 dims_from(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<int>>();
  if (v.size() != 3 || v[0] < 1 || v[1] < 1 || v[2] < 1) {
    fail(ErrorCode::ConfigError, std::string(key) + " must be three positive extents");
  }
  return {v[0], v[1], v[2]};
}

json augment_json(const AugmentConfig& a) {
  return {{"elastic_prob", a.elastic_prob},       {"elastic_sigma_min", a.elastic_sigma_min},
          {"elastic_sigma_max", a.elastic_sigma_max}, {"elastic_magnitude", a.elastic_magnitude},
          {"rotation_prob", a.rotation_prob},     {"rotation_deg", a.rotation_deg},
          {"brightness_prob", a.brightness_prob}, {"brightness", a.brightness}};
}

AugmentConfig augment_from(const json& j) {
  AugmentConfig a;
  a.elastic_prob = j.at("elastic_prob").get<double>();
  a.elastic_sigma_min = j.at("elastic_sigma_min").get<double>();
  a.elastic_sigma_max = j.at("elastic_sigma_max").get<double>();
  a.elastic_magnitude = j.at("elastic_magnitude").get<double>();
  a.rotation_prob = j.at("rotation_prob").get<double>();
  a.rotation_deg = j.at("rotation_deg").get<double>();
  a.brightness_prob = j.at("brightness_prob").get<double>();
  a.brightness = j.at("brightness").get<double>();
  if (a.elastic_sigma_min <= 0.0 || a.elastic_sigma_max < a.elastic_sigma_min) {
    fail(ErrorCode::ConfigError, "elastic sigma range must be positive and ordered");
  }
  return a;
}

json stage_json(const StageConfig& s) {
  return {{"widths", s.model.widths},
          {"bridge", s.model.bridge},
          {"gate_ratio", s.model.gate_ratio},
          {"background_prior", s.model.background_prior},
          {"loss", s.loss},
          {"optimizer", s.optimizer.name},
          {"lr", s.optimizer.lr},
          {"lookahead_k", s.optimizer.lookahead_k},
          {"lookahead_alpha", s.optimizer.lookahead_alpha},
          {"epochs", s.epochs},
          {"batch", s.batch},
          {"augment", augment_json(s.augment)}};
}

StageConfig stage_from(const json& j, models::Architecture arch, std::uint64_t seed) {
  StageConfig s;
  const auto widths = j.at("widths").get<std::vector<int>>();
  const int bridge = j.at("bridge").get<int>();
  s.model = arch == models::Architecture::Binary ? models::binary_config(widths, bridge)
                                                 : models::multiclass_config(widths, bridge);
  s.model.gate_ratio = j.at("gate_ratio").get<double>();
  s.model.background_prior = j.at("background_prior").get<double>();
  if (!(s.model.background_prior >= 0.0 && s.model.background_prior < 1.0)) {
    fail(ErrorCode::ConfigError, "background_prior must lie in [0, 1)");
  }
  s.model.seed = seed;
  s.loss = j.at("loss").get<std::string>();
  (void)losses::parse_loss(s.loss);
  s.optimizer.name = j.at("optimizer").get<std::string>();
  s.optimizer.lr = j.at("lr").get<double>();
  s.optimizer.lookahead_k = j.at("lookahead_k").get<int>();
  s.optimizer.lookahead_alpha = j.at("lookahead_alpha").get<double>();
  (void)optim::make_optimizer(s.optimizer);
  s.epochs = j.at("epochs").get<int>();
  s.batch = j.at("batch").get<int>();
  if (s.epochs < 0 || s.batch < 1) fail(ErrorCode::ConfigError, "epochs must be >= 0 and batch >= 1");
  s.augment = augment_from(j.at("augment"));
  return s;
}

}  // namespace

json PipelineConfig::to_json() const {
  return {{"preset", preset},
          {"seed", seed},
          {"val_fraction", val_fraction},
          {"norm_region", norm_region},
          {"binary",
           [&] {
             json b = stage_json(binary);
             b["input"] = dims_json(binary_input);
             b["threshold"] = binary_threshold;
             return b;
           }()},
          {"multiclass",
           [&] {
             json m = stage_json(multiclass);
             m["patch"] = dims_json(patch.patch);
             m["overlap"] = dims_json(patch.overlap);
             m["min_dims"] = dims_json(min_dims);
             m["tolerance"] = tolerance;
             m["patches_per_case"] = patches_per_case;
             m["use_roi"] = use_roi;
             return m;
           }()},
          {"predict", {{"tta", tta}}},
          {"eval_every", eval_every},
          {"phantom",
           {{"dims", dims_json(phantom.dims)},
            {"count", phantom.count},
            {"seed", phantom.seed},
            {"noise", phantom.noise},
            {"brain_radius", phantom.brain_radius},
            {"edema_radius", phantom.edema_radius},
            {"core_fraction", phantom.core_fraction},
            {"necrosis_fraction", phantom.necrosis_fraction}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  try {
    c.preset = j.at("preset").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.val_fraction = j.at("val_fraction").get<double>();
    if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0)) fail(ErrorCode::ConfigError, "val_fraction in [0, 1)");
    c.norm_region = j.at("norm_region").get<std::string>();
    if (c.norm_region != "nonzero" && c.norm_region != "all") {
      fail(ErrorCode::ConfigError, "norm_region must be 'nonzero' or 'all'");
    }
    const json& b = j.at("binary");
    c.binary = stage_from(b, models::Architecture::Binary, c.seed);
    c.binary_input = dims_from(b, "input");
    c.binary_threshold = b.at("threshold").get<double>();
    const json& m = j.at("multiclass");
    c.multiclass = stage_from(m, models::Architecture::Multiclass, c.seed + 1);
    c.patch.patch = dims_from(m, "patch");
    const auto ov = m.at("overlap").get<std::vector<int>>();
    if (ov.size() != 3) fail(ErrorCode::ConfigError, "overlap must have three entries");
    c.patch.overlap = {ov[0], ov[1], ov[2]};
    c.min_dims = dims_from(m, "min_dims");
    c.tolerance = m.at("tolerance").get<int>();
    c.patches_per_case = m.at("patches_per_case").get<int>();
    c.use_roi = m.at("use_roi").get<bool>();
    for (int a = 0; a < 3; ++a) {
      if (c.patch.overlap[a] < 0 || c.patch.overlap[a] >= c.patch.patch[a]) {
        fail(ErrorCode::ConfigError, "overlap must lie in [0, patch)");
      }
      if (c.min_dims[a] < c.patch.patch[a]) fail(ErrorCode::ConfigError, "min_dims must be at least the patch");
      const int div = c.multiclass.model.divisor();
      if (c.patch.patch[a] % div != 0) {
        fail(ErrorCode::IndivisibleDims, "patch extents must be multiples of " + std::to_string(div));
      }
      if (c.binary_input[a] % c.binary.model.divisor() != 0) {
        fail(ErrorCode::IndivisibleDims,
             "binary input extents must be multiples of " + std::to_string(c.binary.model.divisor()));
      }
    }
    if (c.tolerance < 0 || c.patches_per_case < 1) fail(ErrorCode::ConfigError, "tolerance/patches_per_case");
    c.tta = j.at("predict").at("tta").get<bool>();
    c.eval_every = j.at("eval_every").get<int>();
    if (c.eval_every < 1) fail(ErrorCode::ConfigError, "eval_every must be >= 1");
    const json& p = j.at("phantom");
    c.phantom.dims = dims_from(p, "dims");
    c.phantom.count = p.at("count").get<int>();
    c.phantom.seed = p.at("seed").get<std::uint64_t>();
    c.phantom.noise = p.at("noise").get<double>();
    c.phantom.brain_radius = p.at("brain_radius").get<std::array<double, 2>>();
    c.phantom.edema_radius = p.at("edema_radius").get<std::array<double, 2>>();
    c.phantom.core_fraction = p.at("core_fraction").get<std::array<double, 2>>();
    c.phantom.necrosis_fraction = p.at("necrosis_fraction").get<std::array<double, 2>>();
    if (c.phantom.count < 1) fail(ErrorCode::ConfigError, "phantom.count must be >= 1");
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  return c;
}

json preset_json(const std::string& name) {
  PipelineConfig c;
  c.preset = name;
  if (name == "toy") {
    c.binary.model = models::binary_config({8, 8, 16, 32}, 40);
    c.binary.optimizer = {"A+LH", 3e-3, 5, 0.5};
    c.binary.epochs = 20;
    c.binary.batch = 2;
    c.binary.augment.elastic_sigma_min = c.binary.augment.elastic_sigma_max = 2.0;
    c.binary.augment.elastic_magnitude = 25.0;
    c.binary_input = {32, 32, 32};
    c.multiclass.model = models::multiclass_config({8, 16, 32}, 40);
    c.multiclass.optimizer = {"A+LH", 3e-3, 5, 0.5};
    c.multiclass.epochs = 30;
    c.multiclass.batch = 2;
    c.multiclass.augment.elastic_sigma_min = 10.0;
    c.multiclass.augment.elastic_sigma_max = 13.0;
    c.multiclass.augment.elastic_magnitude = 100.0;
    c.patch = {{24, 24, 32}, {12, 12, 0}};
    c.min_dims = {24, 24, 32};
    c.eval_every = 5;
  } else if (name == "paper") {
    c.binary.model = models::binary_config({40, 40, 80, 160}, 200);
    c.binary.optimizer = {"A+LH", 3e-4, 5, 0.5};
    c.binary.epochs = 300;
    c.binary.batch = 2;
    c.binary.augment.elastic_sigma_min = c.binary.augment.elastic_sigma_max = 2.0;
    c.binary_input = {128, 128, 128};
    c.multiclass.model = models::multiclass_config({64, 128, 256}, 320);
    c.multiclass.optimizer = {"A+LH", 3e-4, 5, 0.5};
    c.multiclass.epochs = 300;
    c.multiclass.batch = 6;
    c.multiclass.augment.elastic_sigma_min = 10.0;
    c.multiclass.augment.elastic_sigma_max = 13.0;
    c.multiclass.augment.elastic_magnitude = 100.0;
    c.patch = {{48, 48, 128}, {24, 24, 0}};
    c.min_dims = {48, 48, 128};
    c.phantom.dims = {240, 240, 155};
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + name + "' (expected toy or paper)");
  }
  c.binary.model.background_prior = 0.95;
  c.multiclass.model.background_prior = 0.95;
  c.binary.loss = "LC";
  c.multiclass.loss = "LC";
  return c.to_json();
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorCode::ConfigError, "override must be key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) fail(ErrorCode::ConfigError, "unknown config key " + key);
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

namespace {

void merge_into(json& base, const json& patch, const std::string& path) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(ErrorCode::ConfigError, "unknown config key " + key);
    if (it->is_object() && base[it.key()].is_object()) {
      merge_into(base[it.key()], *it, key);
    } else {
      base[it.key()] = *it;
    }
  }
}

}  // namespace

PipelineConfig make_config(const std::string& preset, const std::vector<std::string>& overrides) {
  json j = preset_json(preset);
  for (const auto& o : overrides) apply_override(j, o);
  return PipelineConfig::from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config " + path.string());
  json file = json::parse(in, nullptr, false);
  if (file.is_discarded() || !file.is_object()) fail(ErrorCode::ConfigError, path.string() + " is not a JSON object");
  json j = preset_json(file.value("preset", std::string("toy")));
  merge_into(j, file, "");
  for (const auto& o : overrides) apply_override(j, o);
  return PipelineConfig::from_json(j);
}

}  // namespace gliomaseg::pipeline
