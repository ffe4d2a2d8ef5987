#include "pipeline/gradcheck_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "autodiff/conv.hpp"
#include "autodiff/gradcheck.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "layers/layers.hpp"
#include "losses/losses.hpp"

namespace gliomaseg::pipeline {

namespace {

using namespace gliomaseg::ad;
using BP = BoundParams<double>;

std::vector<double> uniform_values(std::size_t n, std::uint32_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> away_from_zero(std::size_t n, std::uint32_t seed, double lo, double hi) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(n);
  for (auto& x : v) x = sign(rng) ? u(rng) : -u(rng);
  return v;
}

void add_random(ParamSet<double>& p, const std::string& name, const Shape& shape, std::uint32_t seed,
                double scale = 1.0) {
  p.add(name, shape, uniform_values(numel(shape), seed, -scale, scale));
}

Tensor<double> probe(const Tensor<double>& t, std::uint32_t seed = 99) {
  return sum_all(mul(t, constant<double>(t.shape(), uniform_values(t.size(), seed))));
}

/// The test points are picked so no kink lies within a step of any
/// pre-activation; this enforces it.
void require_margin(const Tensor<double>& pre, const std::string& what) {
  for (double v : pre.data()) {
    if (std::abs(v) <= 5e-3) fail(ErrorCode::NumericFailure, what + ": test point too close to an activation kink");
  }
}

layers::ConvBlockParams<double> block_params(const BP& b) { return {b["w1"], b["b1"], b["w2"], b["b2"]}; }

Tensor<double> one_hot_target(const Shape& shape, std::uint32_t seed) {
  const int k = shape.back();
  const std::size_t rows = numel(shape) / static_cast<std::size_t>(k);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<double> v(numel(shape), 0.0);
  for (std::size_t r = 0; r < rows; ++r) v[r * static_cast<std::size_t>(k) + static_cast<std::size_t>(pick(rng))] = 1.0;
  return constant<double>(shape, std::move(v));
}

struct Check {
  std::string name;
  std::function<ParamSet<double>()> params;
  std::function<Tensor<double>(const BP&)> f;
  std::function<void(const BP&)> precondition;
};

std::vector<Check> checks() {
  std::vector<Check> out;
  for (int stride : {1, 2}) {
    out.push_back({"conv3d k3 stride " + std::to_string(stride),
                   [] {
                     ParamSet<double> p;
                     add_random(p, "x", {1, 4, 4, 4, 2}, 10);
                     add_random(p, "w", {3, 3, 3, 2, 3}, 11);
                     add_random(p, "b", {3}, 12);
                     return p;
                   },
                   [stride](const BP& b) { return probe(conv3d(b["x"], b["w"], b["b"], stride, Padding::Same)); },
                   {}});
  }
  out.push_back({"conv3d k1",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {2, 4, 4, 4, 4}, 10);
                   add_random(p, "w", {1, 1, 1, 4, 3}, 11);
                   add_random(p, "b", {3}, 12);
                   return p;
                 },
                 [](const BP& b) { return probe(conv3d(b["x"], b["w"], b["b"], 1, Padding::Same)); },
                 {}});
  out.push_back({"conv_transpose3d",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {2, 2, 2, 2, 3}, 18);
                   add_random(p, "w", {2, 2, 2, 3, 2}, 19);
                   add_random(p, "b", {2}, 20);
                   return p;
                 },
                 [](const BP& b) { return probe(conv_transpose3d(b["x"], b["w"], b["b"])); },
                 {}});

  const auto act_params = [] {
    ParamSet<double> p;
    p.add("x", {2, 2, 2, 2, 3}, away_from_zero(48, 33, 0.01, 2.0));
    return p;
  };
  out.push_back({"instance_norm", act_params, [](const BP& b) { return probe(layers::instance_norm(b["x"])); }, {}});
  out.push_back({"elu", act_params, [](const BP& b) { return probe(layers::elu(b["x"])); }, {}});
  out.push_back({"relu", act_params, [](const BP& b) { return probe(layers::relu(b["x"])); }, {}});
  out.push_back({"sigmoid", act_params, [](const BP& b) { return probe(layers::sigmoid(b["x"])); }, {}});
  out.push_back({"softmax", act_params, [](const BP& b) { return probe(layers::softmax_channels(b["x"])); }, {}});

  out.push_back({"channel_attention",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {2, 4, 4, 4, 3}, 35);
                   add_random(p, "wc", {3}, 36, 2.0);
                   return p;
                 },
                 [](const BP& b) { return sum_all(layers::channel_attention(b["x"], b["wc"])); },
                 {}});

  const auto gate = [](const BP& b) { return layers::AttentionGateParams<double>{b["wx"], b["wg"], b["wpsi"]}; };
  out.push_back({"attention_gate",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {1, 4, 4, 4, 2}, 1000);
                   add_random(p, "g", {1, 2, 2, 2, 4}, 2000);
                   add_random(p, "wx", {1, 1, 1, 2, 2}, 3000);
                   add_random(p, "wg", {1, 1, 1, 4, 2}, 4000);
                   add_random(p, "wpsi", {1, 1, 1, 2, 1}, 5000);
                   return p;
                 },
                 [gate](const BP& b) { return probe(layers::attention_gate(b["x"], b["g"], gate(b))); },
                 [](const BP& b) {
                   require_margin(add(conv3d(b["x"], b["wx"], Tensor<double>(), 2, Padding::Same),
                                      conv3d(b["g"], b["wg"], Tensor<double>(), 1, Padding::Same)),
                                  "attention_gate");
                 }});

  out.push_back({"conv_block1",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {2, 4, 4, 4, 2}, 1015);
                   add_random(p, "w1", {3, 3, 3, 2, 3}, 2015, 0.5);
                   add_random(p, "b1", {3}, 3015, 0.1);
                   add_random(p, "w2", {3, 3, 3, 3, 3}, 4015, 0.5);
                   add_random(p, "b2", {3}, 5015, 0.1);
                   return p;
                 },
                 [](const BP& b) { return probe(layers::conv_block1(b["x"], block_params(b))); },
                 [](const BP& b) {
                   const Tensor<double> c1 = conv3d(b["x"], b["w1"], b["b1"], 1, Padding::Same);
                   require_margin(c1, "conv_block1");
                   require_margin(conv3d(layers::instance_norm(layers::elu(c1)), b["w2"], b["b2"], 1, Padding::Same),
                                  "conv_block1");
                 }});

  out.push_back({"conv_block2",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {1, 4, 4, 4, 2}, 1002);
                   add_random(p, "w1", {3, 3, 3, 2, 3}, 2002, 0.5);
                   add_random(p, "b1", {3}, 3002, 0.1);
                   add_random(p, "w2", {3, 3, 3, 3, 3}, 4002, 0.5);
                   add_random(p, "b2", {3}, 5002, 0.1);
                   add_random(p, "wc", {3}, 6002, 1.0);
                   return p;
                 },
                 [](const BP& b) {
                   return probe(layers::conv_block2(b["x"], layers::ConvBlock2Params<double>{block_params(b), b["wc"]}));
                 },
                 [](const BP& b) {
                   const Tensor<double> c1 = conv3d(b["x"], b["w1"], b["b1"], 1, Padding::Same);
                   require_margin(c1, "conv_block2");
                   require_margin(conv3d(layers::instance_norm(layers::relu(c1)), b["w2"], b["b2"], 1, Padding::Same),
                                  "conv_block2");
                 }});

  const Shape multi{1, 4, 4, 4, 4};
  const Shape single{2, 4, 4, 4, 1};
  for (const char* name : {"DL", "CE", "DL+CE", "LC"}) {
    const losses::LossKind kind = losses::parse_loss(name);
    out.push_back({std::string("loss ") + name + " softmax",
                   [multi] {
                     ParamSet<double> p;
                     add_random(p, "z", multi, 700, 2.0);
                     return p;
                   },
                   [kind, multi](const BP& b) {
                     return losses::compute_loss(kind, layers::softmax_channels(b["z"]), one_hot_target(multi, 701));
                   },
                   {}});
    out.push_back({std::string("loss ") + name + " sigmoid",
                   [single] {
                     ParamSet<double> p;
                     add_random(p, "z", single, 710, 2.0);
                     return p;
                   },
                   [kind, single](const BP& b) {
                     std::vector<double> y = uniform_values(numel(single), 711, 0.0, 1.0);
                     for (auto& v : y) v = v > 0.7 ? 1.0 : 0.0;
                     return losses::compute_loss(kind, layers::sigmoid(b["z"]), constant<double>(single, y));
                   },
                   {}});
  }
  out.push_back({"log_cosh",
                 [] {
                   ParamSet<double> p;
                   add_random(p, "x", {2, 2, 2, 2, 2}, 720, 3.0);
                   return p;
                 },
                 [](const BP& b) { return probe(losses::log_cosh(b["x"])); },
                 {}});
  return out;
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite() {
  std::vector<GradCheckEntry> out;
  for (const Check& c : checks()) {
    const auto t0 = std::chrono::steady_clock::now();
    ParamSet<double> p = c.params();
    if (c.precondition) c.precondition(p.bind(nullptr));
    const GradCheckResult r = finite_diff_check(c.f, p, kGradCheckStep);
    GradCheckEntry e;
    e.name = c.name;
    e.max_rel_error = r.max_rel_error;
    e.coordinates = r.coordinates;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    e.passed = std::isfinite(r.max_rel_error) && r.max_rel_error <= kGradCheckTolerance;
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json gradcheck_json(const std::vector<GradCheckEntry>& entries) {
  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  double seconds = 0.0;
  for (const auto& e : entries) {
    checks.push_back({{"name", e.name},
                      {"max_rel_error", e.max_rel_error},
                      {"coordinates", e.coordinates},
                      {"seconds", e.seconds},
                      {"passed", e.passed}});
    all = all && e.passed;
    seconds += e.seconds;
  }
  return {{"tolerance", kGradCheckTolerance},
          {"step", kGradCheckStep},
          {"passed", all},
          {"seconds", seconds},
          {"checks", checks}};
}

}  // namespace gliomaseg::pipeline
