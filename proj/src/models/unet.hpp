#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autodiff/params.hpp"
#include "autodiff/tensor.hpp"
#include "json.hpp"

namespace gliomaseg::models {

using ad::BoundParams;
using ad::ParamSet;
using ad::Tensor;

enum class Architecture {
  Binary,      // ConvBlock1 encoder/decoder, concatenated skips, sigmoid head
  Multiclass,  // ConvBlock2 everywhere, attention-gated skips, softmax head
};

struct UNetConfig {
  Architecture arch = Architecture::Binary;
  int in_channels = 4;
  std::vector<int> widths;  // one per encoder level, shallow to deep
  int bridge = 0;
  int classes = 1;
  /// Attention-gate inner channels as a fraction of the skip width.
  double gate_ratio = 0.5;
  /// Initial background probability set through the head bias; 0 leaves the
  /// bias at zero.
  double background_prior = 0.0;
  std::uint64_t seed = 1;

  int depth() const { return static_cast<int>(widths.size()); }
  /// Spatial extents must be multiples of this.
  int divisor() const { return 1 << depth(); }

  nlohmann::json to_json() const;
  static UNetConfig from_json(const nlohmann::json& j);
};

UNetConfig binary_config(std::vector<int> widths, int bridge);
UNetConfig multiclass_config(std::vector<int> widths, int bridge);

template <typename T>
struct ForwardResult {
  Tensor<T> logits;  // pre-activation of the head
  Tensor<T> probs;   // sigmoid (1 class) or channel softmax
};

class UNet {
 public:
  explicit UNet(UNetConfig config);

  const UNetConfig& config() const { return config_; }
  ParamSet<float>& params() { return params_; }
  const ParamSet<float>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  /// input is (N, X, Y, Z, in_channels), spatial extents divisible by
  /// config().divisor(); IndivisibleDims otherwise.
  template <typename T>
  ForwardResult<T> forward(const BoundParams<T>& p, const Tensor<T>& input) const;

  void check_input(const ad::Shape& shape) const;

 private:
  void build();

  UNetConfig config_;
  ParamSet<float> params_;
};

UNet build_binary_unet(const UNetConfig& config);
UNet build_multiclass_unet(const UNetConfig& config);

extern template ForwardResult<float> UNet::forward<float>(const BoundParams<float>&, const Tensor<float>&) const;
extern template ForwardResult<double> UNet::forward<double>(const BoundParams<double>&, const Tensor<double>&) const;

}  // namespace gliomaseg::models
