#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "common/error.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gliomaseg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <typename F>
std::optional<gliomaseg::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const gliomaseg::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testutil

#define CHECK_ERROR(expr, code) CHECK(testutil::error_of([&] { (void)(expr); }) == (code))
