#include "pipeline/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "augment/augment.hpp"
#include "common/error.hpp"
#include "losses/losses.hpp"
#include "losses/metrics.hpp"
#include "models/checkpoint.hpp"
#include "models/predictor.hpp"
#include "optim/optim.hpp"
#include "pipeline/stages.hpp"

namespace gliomaseg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

Split split_cases(std::vector<std::string> ids, double val_fraction, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(ids.size())));
  if (!ids.empty() && n_val >= ids.size()) fail(ErrorCode::ConfigError, "validation split leaves no training cases");
  Split s;
  s.val.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val), ids.end());
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Sample {
  io::ChannelVolume input;
  io::ChannelVolume target;
};

struct FitSpec {
  std::string stage;
  const StageConfig* stage_config = nullptr;
  const PipelineConfig* config = nullptr;
  std::size_t samples_per_epoch = 0;
  std::function<Sample(std::size_t index, std::uint64_t seed)> sample;
  std::function<std::optional<double>(const models::UNet&)> validate;
  fs::path out_dir;
};

std::vector<io::MultiModalCase> load_cases(const io::DatasetManifest& manifest, const std::vector<std::string>& ids,
                                           io::NormRegion region) {
  std::vector<io::MultiModalCase> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    out.push_back(io::load_case(manifest, id, region));
    if (!out.back().label) fail(ErrorCode::DataError, id + " has no label; training needs ground truth");
  }
  return out;
}

io::NormRegion norm_region(const PipelineConfig& c) {
  return c.norm_region == "all" ? io::NormRegion::All : io::NormRegion::NonzeroOnly;
}

io::MultiModalCase augment_case(const io::MultiModalCase& c, const AugmentConfig& a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  io::MultiModalCase out = c;
  if (u(rng) < a.elastic_prob && a.elastic_magnitude > 0.0) {
    const double sigma = a.elastic_sigma_min + u(rng) * (a.elastic_sigma_max - a.elastic_sigma_min);
    out = augment::elastic_deform(out, sigma, a.elastic_magnitude, rng());
  }
  if (u(rng) < a.rotation_prob && a.rotation_deg > 0.0) out = augment::random_rotation(out, a.rotation_deg, rng());
  if (u(rng) < a.brightness_prob && a.brightness > 0.0) out = augment::random_brightness(out, a.brightness, rng());
  return out;
}

TrainResult fit(const FitSpec& spec) {
  const StageConfig& sc = *spec.stage_config;
  const auto start = Clock::now();
  fs::create_directories(spec.out_dir);
  const fs::path ckpt_path = spec.out_dir / (spec.stage + ".ckpt");
  std::ofstream log(spec.out_dir / (spec.stage + "_metrics.jsonl"), std::ios::trunc);
  if (!log) fail(ErrorCode::IoFailure, "cannot write metrics log in " + spec.out_dir.string());

  models::UNet model(sc.model);
  auto optimizer = optim::make_optimizer(sc.optimizer);
  const losses::LossKind loss_kind = losses::parse_loss(sc.loss);
  std::mt19937_64 rng(spec.config->seed ^ std::hash<std::string>{}(spec.stage));

  TrainResult result;
  result.checkpoint = ckpt_path;

  const auto save = [&](int epoch, std::optional<double> val) {
    optim::OptimState state;
    optimizer->save(state, "opt");
    json meta = {{"stage", spec.stage},
                 {"epoch", epoch},
                 {"loss", sc.loss},
                 {"optimizer", sc.optimizer.name},
                 {"pipeline", spec.config->to_json()}};
    if (val) meta["val_dice"] = *val;
    models::save_checkpoint(ckpt_path, model, meta, &state);
  };

  const auto record = [&](EpochRecord r) {
    json line = {{"stage", spec.stage}, {"epoch", r.epoch}, {"train_loss", r.train_loss}, {"seconds", r.seconds}};
    line["val_dice"] = r.val_dice ? json(*r.val_dice) : json(nullptr);
    log << line.dump() << '\n';
    log.flush();
    result.history.push_back(r);
  };

  {
    EpochRecord r;
    r.val_dice = spec.validate(model);
    r.train_loss = std::nan("");
    r.seconds = seconds_since(start);
    record(r);
    result.best_val_dice = r.val_dice.value_or(-1.0);
    save(0, r.val_dice);
  }

  std::vector<std::size_t> order(spec.samples_per_epoch);
  for (int epoch = 1; epoch <= sc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(sc.batch)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(sc.batch));
      std::vector<Sample> samples;
      for (std::size_t i = b0; i < b1; ++i) samples.push_back(spec.sample(order[i], rng()));
      std::vector<const io::ChannelVolume*> inputs, targets;
      for (const auto& s : samples) {
        inputs.push_back(&s.input);
        targets.push_back(&s.target);
      }
      const ad::Tensor<float> x = models::to_tensor(inputs);
      const ad::Tensor<float> y = models::to_tensor(targets);
      ad::Tape<float> tape;
      const auto bound = model.params().bind(&tape);
      const auto out = model.forward(bound, x);
      const ad::Tensor<float> loss = losses::compute_loss(loss_kind, out.probs, y);
      const float value = loss.item();
      if (!std::isfinite(value)) fail(ErrorCode::NumericFailure, spec.stage + ": non-finite training loss");
      tape.backward(loss);
      const std::vector<float> grads = bound.gradient();
      optimizer->step(model.params().flat(), grads);
      loss_sum += value;
      ++batches;
    }
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = batches ? loss_sum / batches : 0.0;
    if (epoch % spec.config->eval_every == 0 || epoch == sc.epochs) r.val_dice = spec.validate(model);
    r.seconds = seconds_since(start);
    record(r);
    // Without validation cases the latest weights are kept.
    if (r.val_dice ? *r.val_dice > result.best_val_dice : epoch == sc.epochs) {
      if (r.val_dice) result.best_val_dice = *r.val_dice;
      result.best_epoch = epoch;
      save(epoch, r.val_dice);
    }
  }
  result.seconds = seconds_since(start);
  return result;
}

std::vector<std::string> manifest_ids(const io::DatasetManifest& m) {
  std::vector<std::string> ids;
  for (const auto& e : m.entries) ids.push_back(e.case_id);
  return ids;
}

}  // namespace

TrainResult train_binary(const PipelineConfig& config, const io::DatasetManifest& manifest, const fs::path& out_dir) {
  const Split split = split_cases(manifest_ids(manifest), config.val_fraction, config.seed);
  if (split.train.empty()) fail(ErrorCode::DataError, "no training cases");
  const io::NormRegion region = norm_region(config);

  std::vector<BinaryView> train_views;
  for (const auto& c : load_cases(manifest, split.train, region)) train_views.push_back(binary_view(c, config.binary_input));
  const std::vector<io::MultiModalCase> val_cases = load_cases(manifest, split.val, region);
  std::vector<BinaryView> val_views;
  for (const auto& c : val_cases) val_views.push_back(binary_view(c, config.binary_input));

  FitSpec spec;
  spec.stage = "binary";
  spec.stage_config = &config.binary;
  spec.config = &config;
  spec.out_dir = out_dir;
  spec.samples_per_epoch = train_views.size();
  spec.sample = [&](std::size_t i, std::uint64_t seed) {
    const io::MultiModalCase c = augment_case(train_views[i].resized, config.binary.augment, seed);
    return Sample{c.stacked(), tumor_mask(*c.label)};
  };
  spec.validate = [&](const models::UNet& model) -> std::optional<double> {
    if (val_cases.empty()) return std::nullopt;
    double sum = 0.0;
    for (std::size_t i = 0; i < val_cases.size(); ++i) {
      const io::ChannelVolume probs = binary_probabilities(model, val_views[i]);
      const io::ChannelVolume truth = tumor_mask(*val_cases[i].label);
      std::vector<std::uint8_t> p(probs.data.size()), t(truth.data.size());
      for (std::size_t v = 0; v < p.size(); ++v) {
        p[v] = probs.data[v] > config.binary_threshold ? 1 : 0;
        t[v] = truth.data[v] > 0.5f ? 1 : 0;
      }
      sum += losses::dice_metric(p, t);
    }
    return sum / static_cast<double>(val_cases.size());
  };
  return fit(spec);
}

TrainResult train_multiclass(const PipelineConfig& config, const io::DatasetManifest& manifest,
                             const std::optional<fs::path>& binary_checkpoint, const fs::path& out_dir) {
  const Split split = split_cases(manifest_ids(manifest), config.val_fraction, config.seed);
  if (split.train.empty()) fail(ErrorCode::DataError, "no training cases");
  const io::NormRegion region = norm_region(config);

  std::optional<models::UNet> binary;
  if (config.use_roi && binary_checkpoint) {
    binary.emplace(models::model_from_checkpoint(models::read_checkpoint(*binary_checkpoint)));
    if (binary->config().arch != models::Architecture::Binary) {
      fail(ErrorCode::CheckpointMismatch, binary_checkpoint->string() + " is not a binary-stage checkpoint");
    }
  }
  const auto view_of = [&](const io::MultiModalCase& c) {
    std::optional<RoiBox> roi;
    if (config.use_roi) {
      roi = binary ? roi_from_probabilities(binary_probabilities(*binary, binary_view(c, config.binary_input)), c,
                                            static_cast<float>(config.binary_threshold), config.tolerance)
                   : roi_from_labels(c, config.tolerance);
    }
    return multiclass_view(c, roi, config.min_dims);
  };

  std::vector<MulticlassView> train_views, val_views;
  for (const auto& c : load_cases(manifest, split.train, region)) train_views.push_back(view_of(c));
  const std::vector<io::MultiModalCase> val_cases = load_cases(manifest, split.val, region);
  for (const auto& c : val_cases) val_views.push_back(view_of(c));
  const io::Dims3 patch = config.patch.patch;
  for (const auto& v : train_views) {
    for (int a = 0; a < 3; ++a) {
      if (v.cropped.dims()[a] < patch[a]) {
        fail(ErrorCode::PatchLargerThanVolume, v.cropped.case_id + ": training grid smaller than the patch");
      }
    }
  }

  FitSpec spec;
  spec.stage = config.use_roi ? "multiclass" : "multiclass_noroi";
  spec.stage_config = &config.multiclass;
  spec.config = &config;
  spec.out_dir = out_dir;
  spec.samples_per_epoch = train_views.size() * static_cast<std::size_t>(config.patches_per_case);
  spec.sample = [&](std::size_t i, std::uint64_t seed) {
    const MulticlassView& v = train_views[i % train_views.size()];
    std::mt19937_64 rng(seed);
    const io::MultiModalCase c = augment_case(v.cropped, config.multiclass.augment, rng());
    io::Dims3 origin;
    for (int a = 0; a < 3; ++a) {
      origin[a] = std::uniform_int_distribution<int>(0, c.dims()[a] - patch[a])(rng);
    }
    return Sample{models::extract_patch(c.stacked(), origin, patch),
                  models::extract_patch(one_hot(*c.label), origin, patch)};
  };
  spec.validate = [&](const models::UNet& model) -> std::optional<double> {
    if (val_cases.empty()) return std::nullopt;
    std::vector<losses::CaseReport> reports;
    for (std::size_t i = 0; i < val_cases.size(); ++i) {
      const CasePrediction p = predict_view(model, val_views[i], config.patch, false);
      reports.push_back(losses::case_report(p.mask, *val_cases[i].label, val_cases[i].case_id));
    }
    return losses::aggregate(std::move(reports)).mean.mean;
  };
  return fit(spec);
}

}  // namespace gliomaseg::pipeline
