#include <cmath>
#include <vector>

#include "autodiff/conv.hpp"
#include "doctest.h"
#include "grad_helpers.hpp"
#include "layers/layers.hpp"
#include "test_util.hpp"

using namespace gliomaseg;
using namespace gliomaseg::ad;
using namespace gliomaseg::layers;
using testutil::add_random;
using testutil::probe;

namespace {

void channel_stats(const Tensor<double>& t, int n, int c, double& mean, double& var) {
  const int C = t.dim(4);
  const std::size_t s = t.size() / static_cast<std::size_t>(t.dim(0) * C);
  double sum = 0.0, sq = 0.0;
  for (std::size_t v = 0; v < s; ++v) {
    const double x = t.data()[(static_cast<std::size_t>(n) * s + v) * C + c];
    sum += x;
    sq += x * x;
  }
  mean = sum / static_cast<double>(s);
  var = sq / static_cast<double>(s) - mean * mean;
}

ConvBlockParams<double> block_params(const BoundParams<double>& b) {
  return {b["w1"], b["b1"], b["w2"], b["b2"]};
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("instance_norm values") {
  Tensor<double> x = constant<double>({1, 3, 1, 1, 1}, {2.0, 4.0, 6.0});
  Tensor<double> y = instance_norm(x, 0.0);
  CHECK(y.data()[0] == doctest::Approx(-1.2247449));
  CHECK(y.data()[2] == doctest::Approx(1.2247449));
  Tensor<double> ye = instance_norm(x);
  CHECK(ye.data()[2] == doctest::Approx(1.2247449).epsilon(1e-5));

  Tensor<double> k = full<double>({1, 2, 2, 2, 1}, 3.0);
  Tensor<double> kn = instance_norm(k);
  for (double v : kn.data()) CHECK(v == 0.0);
  CHECK_ERROR(instance_norm(full<double>({1, 1, 1, 1, 2}, 1.0)), ErrorCode::DegenerateSpatial);
}

TEST_CASE("instance_norm statistics per instance and channel") {
  auto v = testutil::uniform_values(2 * 4 * 4 * 4 * 3, 30);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = v[i] * (1.0 + 40.0 * static_cast<double>(i % 3)) + 7.0;
  Tensor<double> y = instance_norm(constant<double>({2, 4, 4, 4, 3}, v));
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c) {
      double m, s;
      channel_stats(y, n, c, m, s);
      CHECK(std::abs(m) <= 1e-5);
      CHECK(std::abs(s - 1.0) <= 1e-4);
    }

  // swapping instances swaps outputs
  const std::size_t half = v.size() / 2;
  std::vector<double> swapped(v.begin() + static_cast<std::ptrdiff_t>(half), v.end());
  swapped.insert(swapped.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half));
  Tensor<double> ys = instance_norm(constant<double>({2, 4, 4, 4, 3}, swapped));
  for (std::size_t i = 0; i < half; ++i) CHECK(ys.data()[i] == y.data()[i + half]);
}

TEST_CASE("activations") {
  Tensor<double> x = constant<double>({3}, {-1.0, 0.0, 2.0});
  Tensor<double> e = elu(x);
  CHECK(e.data()[0] == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(e.data()[0] == doctest::Approx(-0.632121).epsilon(1e-6));
  CHECK(e.data()[1] == 0.0);
  CHECK(e.data()[2] == 2.0);
  CHECK(elu(constant<double>({2}, {-1e-9, 1e-9})).data()[0] == doctest::Approx(-1e-9));
  CHECK(sigmoid(constant<double>({1}, {0.0})).item() == 0.5);
  CHECK(sigmoid(constant<double>({2}, {-800.0, 800.0})).data()[0] >= 0.0);
  CHECK(relu(x).data()[0] == 0.0);
  CHECK(relu(x).data()[2] == 2.0);

  Tensor<double> s = softmax_channels(constant<double>({1, 4}, {1.7, 1.7, 1.7, 1.7}));
  for (double v : s.data()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("softmax sums and shift invariance") {
  auto v = testutil::uniform_values(500 * 4, 31, -20.0, 20.0);
  Tensor<float> logits = constant<float>({500, 4}, std::vector<float>(v.begin(), v.end()));
  Tensor<float> p = softmax_channels(logits);
  std::vector<float> shifted(v.begin(), v.end());
  auto shift = testutil::uniform_values(500, 32, -50.0, 50.0);
  for (int r = 0; r < 500; ++r)
    for (int k = 0; k < 4; ++k) shifted[r * 4 + k] += static_cast<float>(shift[r]);
  Tensor<float> q = softmax_channels(constant<float>({500, 4}, shifted));
  for (int r = 0; r < 500; ++r) {
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      sum += p.data()[r * 4 + k];
      CHECK(std::abs(p.data()[r * 4 + k] - q.data()[r * 4 + k]) <= 1e-6);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("activation gradients") {
  ParamSet<double> p;
  p.add("x", {2, 2, 2, 2, 3}, testutil::away_from_zero(48, 33, 0.01, 2.0));
  auto fe = [](const BoundParams<double>& b) { return probe(elu(b["x"])); };
  auto fr = [](const BoundParams<double>& b) { return probe(relu(b["x"])); };
  auto fs = [](const BoundParams<double>& b) { return probe(sigmoid(b["x"])); };
  auto fm = [](const BoundParams<double>& b) { return probe(softmax_channels(b["x"])); };
  auto fi = [](const BoundParams<double>& b) { return probe(instance_norm(b["x"])); };
  CHECK(finite_diff_check(fe, p).max_rel_error <= 1e-4);
  CHECK(finite_diff_check(fr, p).max_rel_error <= 1e-4);
  CHECK(finite_diff_check(fs, p).max_rel_error <= 1e-4);
  CHECK(finite_diff_check(fm, p).max_rel_error <= 1e-4);
  CHECK(finite_diff_check(fi, p).max_rel_error <= 1e-4);
}

TEST_CASE("channel attention") {
  auto xv = testutil::uniform_values(2 * 3 * 3 * 3 * 2, 34);
  for (std::size_t i = 1; i < xv.size(); i += 2) xv[i] = 0.0;  // channel 1 silent
  Tensor<double> x = constant<double>({2, 3, 3, 3, 2}, xv);
  Tensor<double> half = channel_attention(x, constant<double>({2}, {0.0, 0.0}));
  for (std::size_t i = 0; i < xv.size(); ++i) CHECK(half.data()[i] == doctest::Approx(xv[i] / 2));
  Tensor<double> w = channel_attention(x, constant<double>({2}, {5.0, -7.0}));
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (i % 2 == 1) CHECK(w.data()[i] == 0.0);
  }
  CHECK_ERROR(channel_attention(x, constant<double>({3}, {1, 2, 3})), ErrorCode::ShapeMismatch);

  ParamSet<double> p;
  add_random(p, "x", {2, 4, 4, 4, 3}, 35);
  add_random(p, "wc", {3}, 36, 2.0);
  auto f = [](const BoundParams<double>& b) { return sum_all(channel_attention(b["x"], b["wc"])); };
  CHECK(finite_diff_check(f, p).max_rel_error <= 1e-4);
}

TEST_CASE("attention gate") {
  ParamSet<double> p;
  add_random(p, "x", {1, 4, 4, 4, 2}, 1000);
  add_random(p, "g", {1, 2, 2, 2, 4}, 2000);
  add_random(p, "wx", {1, 1, 1, 2, 2}, 3000);
  add_random(p, "wg", {1, 1, 1, 4, 2}, 4000);
  add_random(p, "wpsi", {1, 1, 1, 2, 1}, 5000);
  auto gate = [](const BoundParams<double>& b) {
    return AttentionGateParams<double>{b["wx"], b["wg"], b["wpsi"]};
  };
  const BoundParams<double> b0 = p.bind(nullptr);
  Tensor<double> alpha = upsample_trilinear2x(attention_coefficients(b0["x"], b0["g"], gate(b0)));
  for (double a : alpha.data()) {
    CHECK(a > 0.0);
    CHECK(a < 1.0);
  }

  AttentionGateParams<double> zero = gate(b0);
  zero.w_psi = full<double>({1, 1, 1, 2, 1}, 0.0);
  Tensor<double> out = attention_gate(b0["x"], b0["g"], zero);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == doctest::Approx(b0["x"].data()[i] / 2));

  // ReLU margin: the gate's pre-activations stay clear of the kink
  Tensor<double> pre = add(conv3d(b0["x"], b0["wx"], Tensor<double>(), 2, Padding::Same),
                           conv3d(b0["g"], b0["wg"], Tensor<double>(), 1, Padding::Same));
  for (double v : pre.data()) REQUIRE(std::abs(v) > 5e-3);
  auto f = [&](const BoundParams<double>& b) { return probe(attention_gate(b["x"], b["g"], gate(b))); };
  CHECK(finite_diff_check(f, p).max_rel_error <= 1e-4);

  CHECK_ERROR(attention_gate(b0["x"], full<double>({1, 4, 4, 4, 4}, 1.0), gate(b0)), ErrorCode::ShapeMismatch);
}

TEST_CASE("conv block 1") {
  ParamSet<double> p;
  add_random(p, "x", {2, 4, 4, 4, 2}, 1015);
  add_random(p, "w1", {3, 3, 3, 2, 3}, 2015, 0.5);
  add_random(p, "b1", {3}, 3015, 0.1);
  add_random(p, "w2", {3, 3, 3, 3, 3}, 4015, 0.5);
  add_random(p, "b2", {3}, 5015, 0.1);
  const BoundParams<double> b0 = p.bind(nullptr);
  Tensor<double> y = conv_block1(b0["x"], block_params(b0));
  CHECK(y.shape() == Shape{2, 4, 4, 4, 3});

  // ELU's second derivative jumps at 0; keep pre-activations clear of it
  Tensor<double> c1 = conv3d(b0["x"], b0["w1"], b0["b1"], 1, Padding::Same);
  for (double v : c1.data()) REQUIRE(std::abs(v) > 5e-3);
  Tensor<double> c2 = conv3d(instance_norm(elu(c1)), b0["w2"], b0["b2"], 1, Padding::Same);
  for (double v : c2.data()) REQUIRE(std::abs(v) > 5e-3);
  auto f = [](const BoundParams<double>& b) { return probe(conv_block1(b["x"], block_params(b))); };
  CHECK(finite_diff_check(f, p).max_rel_error <= 1e-4);
}

TEST_CASE("conv block 2") {
  ParamSet<double> p;
  add_random(p, "x", {1, 4, 4, 4, 2}, 1002);
  add_random(p, "w1", {3, 3, 3, 2, 3}, 2002, 0.5);
  add_random(p, "b1", {3}, 3002, 0.1);
  add_random(p, "w2", {3, 3, 3, 3, 3}, 4002, 0.5);
  add_random(p, "b2", {3}, 5002, 0.1);
  add_random(p, "wc", {3}, 6002, 1.0);
  auto params = [](const BoundParams<double>& b) { return ConvBlock2Params<double>{block_params(b), b["wc"]}; };
  const BoundParams<double> b0 = p.bind(nullptr);

  // W_c = 0 is the same as halving before the last I-Norm
  ConvBlock2Params<double> z = params(b0);
  z.w_c = full<double>({3}, 0.0);
  Tensor<double> h = instance_norm(relu(conv3d(b0["x"], b0["w1"], b0["b1"], 1, Padding::Same)));
  h = instance_norm(relu(conv3d(h, b0["w2"], b0["b2"], 1, Padding::Same)));
  Tensor<double> ref = instance_norm(scale(h, 0.5));
  Tensor<double> got = conv_block2(b0["x"], z);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got.data()[i] == doctest::Approx(ref.data()[i]));

  // ReLU margin on both convs
  Tensor<double> c1 = conv3d(b0["x"], b0["w1"], b0["b1"], 1, Padding::Same);
  for (double v : c1.data()) REQUIRE(std::abs(v) > 5e-3);
  Tensor<double> c2 = conv3d(instance_norm(relu(c1)), b0["w2"], b0["b2"], 1, Padding::Same);
  for (double v : c2.data()) REQUIRE(std::abs(v) > 5e-3);
  auto f = [&](const BoundParams<double>& b) { return probe(conv_block2(b["x"], params(b))); };
  CHECK(finite_diff_check(f, p).max_rel_error <= 1e-4);
}

}  // TEST_SUITE
