#include "gliomaseg/gliomaseg.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "io/dataset.hpp"
#include "io/raw.hpp"
#include "models/checkpoint.hpp"
#include "models/predictor.hpp"
#include "pipeline/config.hpp"
#include "pipeline/gradcheck_suite.hpp"
#include "pipeline/outputs.hpp"
#include "pipeline/phantom.hpp"
#include "pipeline/runner.hpp"
#include "pipeline/threads.hpp"
#include "pipeline/train.hpp"

using namespace gliomaseg;
using nlohmann::json;

struct gs_config {
  pipeline::PipelineConfig config;
};

struct gs_volume {
  io::Volume volume;
};

struct gs_model {
  models::UNet model;
};

namespace {

thread_local int g_last_status = GS_OK;
thread_local std::string g_last_message;

int status_of(ErrorCode code) { return static_cast<int>(code) + 1; }

int set_error(int status, std::string message) {
  g_last_status = status;
  g_last_message = std::move(message);
  return status;
}

class ArgumentError : public std::exception {
 public:
  explicit ArgumentError(std::string m) : message_(std::move(m)) {}
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  std::string message_;
};

template <typename F>
int guard(F&& f) {
  try {
    f();
    g_last_status = GS_OK;
    g_last_message.clear();
    return GS_OK;
  } catch (const Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const ArgumentError& e) {
    return set_error(GS_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(GS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(GS_INTERNAL, e.what());
  } catch (...) {
    return set_error(GS_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ArgumentError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_json(char** out, const json& j) {
  if (out != nullptr) *out = dup_string(j.dump(2));
}

std::vector<std::string> string_list(const char* const* items, std::size_t n) {
  std::vector<std::string> out;
  if (items == nullptr) return out;
  for (std::size_t i = 0; i < n; ++i) {
    require(items[i], "list entry");
    out.emplace_back(items[i]);
  }
  return out;
}

std::optional<std::filesystem::path> optional_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

constexpr int kLastCoreStatus = static_cast<int>(ErrorCode::NumericFailure) + 1;
static_assert(kLastCoreStatus == GS_NUMERIC_FAILURE, "gs_status must mirror ErrorCode");

}  // namespace

extern "C" {

const char* gs_status_name(int status) {
  if (status == GS_OK) return "Ok";
  if (status > GS_OK && status <= kLastCoreStatus) return to_string(static_cast<ErrorCode>(status - 1));
  if (status == GS_INVALID_ARGUMENT) return "InvalidArgument";
  if (status == GS_INTERNAL) return "Internal";
  return "Unknown";
}

int gs_exit_code(int status) {
  if (status == GS_OK) return 0;
  if (status == GS_INVALID_ARGUMENT) return 2;
  if (status > GS_OK && status <= kLastCoreStatus) {
    return exit_category(static_cast<ErrorCode>(status - 1));
  }
  return 4;
}

int gs_last_error(void) { return g_last_status; }
const char* gs_last_error_message(void) { return g_last_message.c_str(); }

void gs_free_string(char* s) { std::free(s); }

int gs_set_threads(int n) {
  return guard([&] { pipeline::set_threads(n); });
}

int gs_config_create(const char* source, const char* const* overrides, size_t n_overrides, gs_config** out) {
  return guard([&] {
    require(source, "source");
    require(out, "out");
    const std::string s(source);
    const auto ov = string_list(overrides, n_overrides);
    auto cfg = std::make_unique<gs_config>();
    cfg->config = (s == "toy" || s == "paper") ? pipeline::make_config(s, ov) : pipeline::load_config(s, ov);
    *out = cfg.release();
  });
}

int gs_config_json(const gs_config* config, char** out_json) {
  return guard([&] {
    require(config, "config");
    require(out_json, "out_json");
    put_json(out_json, config->config.to_json());
  });
}

void gs_config_free(gs_config* config) { delete config; }

int gs_volume_read(const char* path, gs_volume** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_volume{io::read_volume(path)};
  });
}

int gs_volume_write(const gs_volume* volume, const char* path) {
  return guard([&] {
    require(volume, "volume");
    require(path, "path");
    io::write_volume(volume->volume, path);
  });
}

int gs_volume_create(int nx, int ny, int nz, const float* data, gs_volume** out) {
  return guard([&] {
    require(data, "data");
    require(out, "out");
    if (nx < 1 || ny < 1 || nz < 1) throw ArgumentError("volume extents must be positive");
    const io::Dims3 d{nx, ny, nz};
    *out = new gs_volume{io::Volume(d, {1.0, 1.0, 1.0}, std::vector<float>(data, data + d.count()))};
  });
}

int gs_volume_dims(const gs_volume* volume, int dims[3]) {
  return guard([&] {
    require(volume, "volume");
    require(dims, "dims");
    dims[0] = volume->volume.dims().x;
    dims[1] = volume->volume.dims().y;
    dims[2] = volume->volume.dims().z;
  });
}

const float* gs_volume_data(const gs_volume* volume) { return volume ? volume->volume.data().data() : nullptr; }

void gs_volume_free(gs_volume* volume) { delete volume; }

int gs_model_load(const char* checkpoint, gs_model** out) {
  return guard([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = new gs_model{models::model_from_checkpoint(models::read_checkpoint(checkpoint))};
  });
}

int gs_model_info(const gs_model* model, char** out_json) {
  return guard([&] {
    require(model, "model");
    require(out_json, "out_json");
    json j = model->model.config().to_json();
    j["parameters"] = model->model.parameter_count();
    put_json(out_json, j);
  });
}

int gs_model_forward(const gs_model* model, const float* input, const int shape[5], float* probs, size_t probs_len) {
  return guard([&] {
    require(model, "model");
    require(input, "input");
    require(shape, "shape");
    require(probs, "probs");
    const ad::Shape s(shape, shape + 5);
    for (int v : s) {
      if (v < 1) throw ArgumentError("shape extents must be positive");
    }
    const std::size_t n = ad::numel(s);
    const auto x = ad::constant<float>(s, std::vector<float>(input, input + n));
    const auto out = model->model.forward(model->model.params().bind(nullptr), x);
    if (out.probs.size() != probs_len) {
      fail(ErrorCode::LengthMismatch, "probs buffer holds " + std::to_string(probs_len) + " values, output has " +
                                          std::to_string(out.probs.size()));
    }
    std::copy(out.probs.data().begin(), out.probs.data().end(), probs);
  });
}

void gs_model_free(gs_model* model) { delete model; }

int gs_phantom(const gs_config* config, const char* out_dir, char** out_manifest) {
  return guard([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    const auto path = pipeline::phantom_generate(config->config.phantom, out_dir);
    if (out_manifest != nullptr) *out_manifest = dup_string(path.string());
  });
}

int gs_split(const gs_config* config, const char* manifest, char** out_json) {
  return guard([&] {
    require(config, "config");
    require(manifest, "manifest");
    require(out_json, "out_json");
    put_json(out_json, pipeline::split_json(pipeline::manifest_split(config->config, io::read_manifest(manifest))));
  });
}

int gs_train_binary(const gs_config* config, const char* manifest, const char* out_dir, char** out_json) {
  return guard([&] {
    require(config, "config");
    require(manifest, "manifest");
    require(out_dir, "out_dir");
    const auto r = pipeline::train_binary(config->config, io::read_manifest(manifest), out_dir);
    put_json(out_json, pipeline::train_result_json(r));
  });
}

int gs_train_multiclass(const gs_config* config, const char* manifest, const char* binary_checkpoint,
                        const char* out_dir, char** out_json) {
  return guard([&] {
    require(config, "config");
    require(manifest, "manifest");
    require(out_dir, "out_dir");
    const auto r = pipeline::train_multiclass(config->config, io::read_manifest(manifest),
                                              optional_path(binary_checkpoint), out_dir);
    put_json(out_json, pipeline::train_result_json(r));
  });
}

int gs_predict(const gs_config* config, const char* manifest, const char* binary_checkpoint,
               const char* multiclass_checkpoint, const char* out_dir, const char* const* case_ids, size_t n_cases,
               char** out_json) {
  return guard([&] {
    require(config, "config");
    require(manifest, "manifest");
    require(multiclass_checkpoint, "multiclass_checkpoint");
    require(out_dir, "out_dir");
    const json j = pipeline::predict_manifest(config->config, io::read_manifest(manifest),
                                              optional_path(binary_checkpoint), multiclass_checkpoint, out_dir,
                                              string_list(case_ids, n_cases));
    put_json(out_json, j);
  });
}

int gs_evaluate(const char* manifest, const char* predictions_dir, const char* const* case_ids, size_t n_cases,
                char** out_json) {
  return guard([&] {
    require(manifest, "manifest");
    require(predictions_dir, "predictions_dir");
    require(out_json, "out_json");
    const auto report =
        pipeline::evaluate(io::read_manifest(manifest), predictions_dir, string_list(case_ids, n_cases));
    put_json(out_json, pipeline::report_json(report));
  });
}

int gs_report(const char* manifest, const char* predictions_dir, const char* report_json, const char* out_dir,
              char** out_json) {
  return guard([&] {
    require(manifest, "manifest");
    require(predictions_dir, "predictions_dir");
    require(report_json, "report_json");
    require(out_dir, "out_dir");
    const json parsed = json::parse(report_json, nullptr, false);
    if (parsed.is_discarded()) fail(ErrorCode::DataError, "report is not valid JSON");
    const auto rows = pipeline::percentile_report(pipeline::report_from_json(parsed), io::read_manifest(manifest),
                                                  predictions_dir, out_dir);
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"percentile", r.percentile},
                   {"case_id", r.case_id},
                   {"mean", r.mean_dice},
                   {"image", r.image.string()}});
    }
    put_json(out_json, j);
  });
}

int gs_gradcheck(char** out_json) {
  return guard([&] {
    require(out_json, "out_json");
    put_json(out_json, pipeline::gradcheck_json(pipeline::run_gradcheck_suite()));
  });
}

}  // extern "C"
