// Exercises the shared library through the C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "gliomaseg/gliomaseg.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("gliomaseg_capi_") + tag + "_" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("status names and exit codes") {
  CHECK(std::string(gs_status_name(GS_OK)) == "Ok");
  CHECK(std::string(gs_status_name(GS_CONFIG_ERROR)) == "ConfigError");
  CHECK(std::string(gs_status_name(GS_BAD_MAGIC)) == "BadMagic");
  CHECK(std::string(gs_status_name(GS_NUMERIC_FAILURE)) == "NumericFailure");
  CHECK(std::string(gs_status_name(GS_INVALID_ARGUMENT)) == "InvalidArgument");
  CHECK(std::string(gs_status_name(55)) == "Unknown");
  CHECK(gs_exit_code(GS_OK) == 0);
  CHECK(gs_exit_code(GS_CONFIG_ERROR) == 2);
  CHECK(gs_exit_code(GS_PATCH_LARGER_THAN_VOLUME) == 2);
  CHECK(gs_exit_code(GS_TRUNCATED_PAYLOAD) == 3);
  CHECK(gs_exit_code(GS_MISSING_PREDICTION) == 3);
  CHECK(gs_exit_code(GS_SHAPE_MISMATCH) == 4);
  CHECK(gs_exit_code(GS_INVALID_ARGUMENT) == 2);
  CHECK(gs_exit_code(GS_INTERNAL) == 4);
}

TEST_CASE("errors are reported per call") {
  gs_config* cfg = nullptr;
  CHECK(gs_config_create("no-such-preset", nullptr, 0, &cfg) == GS_CONFIG_ERROR);
  CHECK(cfg == nullptr);
  CHECK(gs_last_error() == GS_CONFIG_ERROR);
  CHECK(std::strlen(gs_last_error_message()) > 0);

  CHECK(gs_config_create("toy", nullptr, 0, nullptr) == GS_INVALID_ARGUMENT);

  const char* overrides[] = {"multiclass.epochs=2"};
  REQUIRE(gs_config_create("toy", overrides, 1, &cfg) == GS_OK);
  CHECK(gs_last_error() == GS_OK);
  char* json = nullptr;
  REQUIRE(gs_config_json(cfg, &json) == GS_OK);
  CHECK(std::string(json).find("\"epochs\": 2") != std::string::npos);
  gs_free_string(json);
  gs_config_free(cfg);

  gs_model* model = nullptr;
  CHECK(gs_model_load("/nonexistent/model.ckpt", &model) == GS_IO_FAILURE);
  CHECK(gs_set_threads(0) == GS_OK);  // keeps the current count
  CHECK(gs_set_threads(1) == GS_OK);
}

TEST_CASE("volume round trip") {
  const fs::path dir = scratch("vol");
  std::vector<float> values(3 * 4 * 5);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.5f * static_cast<float>(i) - 7.0f;
  gs_volume* v = nullptr;
  REQUIRE(gs_volume_create(3, 4, 5, values.data(), &v) == GS_OK);
  for (const char* name : {"v.nii", "v.raw"}) {
    const std::string path = (dir / name).string();
    REQUIRE(gs_volume_write(v, path.c_str()) == GS_OK);
    gs_volume* back = nullptr;
    REQUIRE(gs_volume_read(path.c_str(), &back) == GS_OK);
    int dims[3] = {0, 0, 0};
    REQUIRE(gs_volume_dims(back, dims) == GS_OK);
    CHECK(dims[0] == 3);
    CHECK(dims[2] == 5);
    CHECK(std::memcmp(gs_volume_data(back), values.data(), values.size() * sizeof(float)) == 0);
    gs_volume_free(back);
  }
  gs_volume_free(v);
  CHECK(gs_volume_create(0, 4, 5, values.data(), &v) == GS_INVALID_ARGUMENT);
  fs::remove_all(dir);
}

TEST_CASE("gradient suite through the boundary") {
  char* json = nullptr;
  REQUIRE(gs_gradcheck(&json) == GS_OK);
  CHECK(std::string(json).find("\"passed\": true") != std::string::npos);
  gs_free_string(json);
}

}  // TEST_SUITE
