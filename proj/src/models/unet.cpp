#include "models/unet.hpp"

#include <cmath>
#include <random>

#include "autodiff/conv.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "layers/layers.hpp"

namespace gliomaseg::models {

using ad::Padding;
using ad::Shape;

nlohmann::json UNetConfig::to_json() const {
  return {{"arch", arch == Architecture::Binary ? "binary" : "multiclass"},
          {"in_channels", in_channels},
          {"widths", widths},
          {"bridge", bridge},
          {"classes", classes},
          {"gate_ratio", gate_ratio},
          {"background_prior", background_prior},
          {"seed", seed}};
}

UNetConfig UNetConfig::from_json(const nlohmann::json& j) {
  UNetConfig c;
  try {
    const std::string arch = j.at("arch").get<std::string>();
    if (arch == "binary") {
      c.arch = Architecture::Binary;
    } else if (arch == "multiclass") {
      c.arch = Architecture::Multiclass;
    } else {
      fail(ErrorCode::ConfigError, "unknown architecture " + arch);
    }
    c.in_channels = j.at("in_channels").get<int>();
    c.widths = j.at("widths").get<std::vector<int>>();
    c.bridge = j.at("bridge").get<int>();
    c.classes = j.at("classes").get<int>();
    c.gate_ratio = j.value("gate_ratio", 0.5);
    c.background_prior = j.value("background_prior", 0.0);
    if (!(c.background_prior >= 0.0 && c.background_prior < 1.0)) {
      fail(ErrorCode::ConfigError, "background_prior must lie in [0, 1)");
    }
    c.seed = j.value("seed", std::uint64_t{1});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("model config: ") + e.what());
  }
  return c;
}

UNetConfig binary_config(std::vector<int> widths, int bridge) {
  UNetConfig c;
  c.arch = Architecture::Binary;
  c.widths = std::move(widths);
  c.bridge = bridge;
  c.classes = 1;
  return c;
}

UNetConfig multiclass_config(std::vector<int> widths, int bridge) {
  UNetConfig c;
  c.arch = Architecture::Multiclass;
  c.widths = std::move(widths);
  c.bridge = bridge;
  c.classes = 4;
  return c;
}

namespace {

class Initializer {
 public:
  Initializer(ParamSet<float>& params, std::uint64_t seed) : params_(params), rng_(seed) {}

  // He-uniform over the fan-in of one output value.
  void kernel(const std::string& name, int k, int cin, int cout, int fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    std::vector<float> v(static_cast<std::size_t>(k * k * k * cin * cout));
    for (auto& x : v) x = static_cast<float>(u(rng_));
    params_.add(name, {k, k, k, cin, cout}, std::move(v));
  }
  void conv(const std::string& name, int k, int cin, int cout, bool bias = true) {
    kernel(name + ".w", k, cin, cout, k * k * k * cin);
    if (bias) zeros(name + ".b", cout);
  }
  void zeros(const std::string& name, int n) { params_.add(name, {n}, std::vector<float>(static_cast<std::size_t>(n), 0.0f)); }

 private:
  ParamSet<float>& params_;
  std::mt19937_64 rng_;
};

std::string level(const char* prefix, int i) { return prefix + std::to_string(i); }

template <typename T>
layers::ConvBlockParams<T> block(const BoundParams<T>& p, const std::string& name) {
  return {p[name + ".conv1.w"], p[name + ".conv1.b"], p[name + ".conv2.w"], p[name + ".conv2.b"]};
}

template <typename T>
Tensor<T> run_block(const BoundParams<T>& p, const std::string& name, const Tensor<T>& x, Architecture arch) {
  if (arch == Architecture::Binary) return layers::conv_block1(x, block(p, name));
  return layers::conv_block2(x, layers::ConvBlock2Params<T>{block(p, name), p[name + ".wc"]});
}

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Architecture arch) {
  return arch == Architecture::Binary ? layers::elu(x) : layers::relu(x);
}

}  // namespace

UNet::UNet(UNetConfig config) : config_(std::move(config)) {
  if (config_.in_channels < 1 || config_.classes < 1 || config_.bridge < 1 || config_.widths.empty()) {
    fail(ErrorCode::ConfigError, "model config needs positive channels, classes, bridge and widths");
  }
  for (int w : config_.widths) {
    if (w < 1) fail(ErrorCode::ConfigError, "model widths must be >= 1");
  }
  build();
}

void UNet::build() {
  Initializer init(params_, config_.seed);
  const bool multi = config_.arch == Architecture::Multiclass;
  auto add_block = [&](const std::string& name, int cin, int cout) {
    init.conv(name + ".conv1", 3, cin, cout);
    init.conv(name + ".conv2", 3, cout, cout);
    if (multi) init.zeros(name + ".wc", cout);
  };
  int cin = config_.in_channels;
  for (int i = 0; i < config_.depth(); ++i) {
    const int w = config_.widths[static_cast<std::size_t>(i)];
    add_block(level("enc", i), cin, w);
    init.conv(level("enc", i) + ".down", 3, w, w);
    cin = w;
  }
  add_block("bridge", cin, config_.bridge);
  int below = config_.bridge;
  for (int i = config_.depth() - 1; i >= 0; --i) {
    const int w = config_.widths[static_cast<std::size_t>(i)];
    const std::string name = level("dec", i);
    init.kernel(name + ".up.w", 2, below, w, below);
    init.zeros(name + ".up.b", w);
    if (multi) {
      const int f = std::max(1, static_cast<int>(std::lround(w * config_.gate_ratio)));
      init.kernel(name + ".gate.wx", 1, w, f, w);
      init.kernel(name + ".gate.wg", 1, below, f, below);
      init.kernel(name + ".gate.wpsi", 1, f, 1, f);
    }
    add_block(name + ".block", 2 * w, w);
    below = w;
  }
  init.conv("head", 1, below, config_.classes);
  if (config_.background_prior > 0.0) {
    // Sigmoid head: logit of the foreground share. Softmax head: log priors,
    // the foreground share split evenly.
    const double bg = config_.background_prior;
    auto b = params_.values("head.b");
    if (config_.classes == 1) {
      b[0] = static_cast<float>(std::log((1.0 - bg) / bg));
    } else {
      b[0] = static_cast<float>(std::log(bg));
      const double fg = (1.0 - bg) / (config_.classes - 1);
      for (int k = 1; k < config_.classes; ++k) b[static_cast<std::size_t>(k)] = static_cast<float>(std::log(fg));
    }
  }
}

void UNet::check_input(const Shape& shape) const {
  if (shape.size() != 5 || shape[4] != config_.in_channels) {
    fail(ErrorCode::ShapeMismatch, "model input must be (N, X, Y, Z, " + std::to_string(config_.in_channels) +
                                       "), got " + ad::shape_string(shape));
  }
  const int d = config_.divisor();
  for (int a = 1; a <= 3; ++a) {
    if (shape[static_cast<std::size_t>(a)] % d != 0) {
      fail(ErrorCode::IndivisibleDims, "spatial extents " + ad::shape_string(shape) + " must be multiples of " +
                                           std::to_string(d));
    }
  }
}

template <typename T>
ForwardResult<T> UNet::forward(const BoundParams<T>& p, const Tensor<T>& input) const {
  check_input(input.shape());
  const Architecture arch = config_.arch;
  std::vector<Tensor<T>> skips;
  Tensor<T> h = input;
  for (int i = 0; i < config_.depth(); ++i) {
    const std::string name = level("enc", i);
    h = run_block(p, name, h, arch);
    skips.push_back(h);
    h = ad::conv3d(h, p[name + ".down.w"], p[name + ".down.b"], 2, Padding::Same);
    h = layers::instance_norm(activate(h, arch));
  }
  h = run_block(p, "bridge", h, arch);
  for (int i = config_.depth() - 1; i >= 0; --i) {
    const std::string name = level("dec", i);
    Tensor<T> skip = skips[static_cast<std::size_t>(i)];
    if (arch == Architecture::Multiclass) {
      skip = layers::attention_gate(
          skip, h, layers::AttentionGateParams<T>{p[name + ".gate.wx"], p[name + ".gate.wg"], p[name + ".gate.wpsi"]});
    }
    Tensor<T> up = ad::conv_transpose3d(h, p[name + ".up.w"], p[name + ".up.b"]);
    up = layers::instance_norm(activate(up, arch));
    h = run_block(p, name + ".block", ad::concat_channels(up, skip), arch);
  }
  ForwardResult<T> out;
  out.logits = ad::conv3d(h, p["head.w"], p["head.b"], 1, Padding::Same);
  out.probs = config_.classes == 1 ? layers::sigmoid(out.logits) : layers::softmax_channels(out.logits);
  return out;
}

UNet build_binary_unet(const UNetConfig& config) {
  if (config.arch != Architecture::Binary || config.classes != 1) {
    fail(ErrorCode::ConfigError, "binary U-Net needs the binary architecture with one output class");
  }
  return UNet(config);
}

UNet build_multiclass_unet(const UNetConfig& config) {
  if (config.arch != Architecture::Multiclass || config.classes < 2) {
    fail(ErrorCode::ConfigError, "multiclass U-Net needs the multiclass architecture with >= 2 classes");
  }
  for (std::size_t i = 1; i < config.widths.size(); ++i) {
    if (config.widths[i] <= config.widths[i - 1]) fail(ErrorCode::ConfigError, "multiclass widths must ascend");
  }
  return UNet(config);
}

template ForwardResult<float> UNet::forward<float>(const BoundParams<float>&, const Tensor<float>&) const;
template ForwardResult<double> UNet::forward<double>(const BoundParams<double>&, const Tensor<double>&) const;

}  // namespace gliomaseg::models
