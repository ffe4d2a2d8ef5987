#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"
#include "json.hpp"
#include "models/unet.hpp"
#include "optim/optim.hpp"

namespace gliomaseg::models {

/// File layout: "GSCKPT01", u32 version, u64 header length, JSON header, then
/// little-endian float32 arrays at the offsets listed in the header. Arrays
/// are named "param/<name>" and "optim/<key>".
struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();  // includes "model" (UNetConfig)
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const UNet& model, nlohmann::json meta,
                     const optim::OptimState* optimizer = nullptr);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rebuilds the network from the embedded config and copies the parameters;
/// CheckpointMismatch when names or shapes disagree.
UNet model_from_checkpoint(const Checkpoint& ckpt);
void load_parameters(UNet& model, const Checkpoint& ckpt);
optim::OptimState optimizer_state(const Checkpoint& ckpt);

}  // namespace gliomaseg::models
