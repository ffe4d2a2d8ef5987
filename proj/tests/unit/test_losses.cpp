#include <cmath>
#include <vector>

#include "doctest.h"
#include "grad_helpers.hpp"
#include "layers/layers.hpp"
#include "losses/losses.hpp"
#include "losses/metrics.hpp"
#include "test_util.hpp"

using namespace gliomaseg;
using namespace gliomaseg::ad;
using namespace gliomaseg::losses;

namespace {

// Plain-loop soft dice over channels [first, K).
double dice_oracle(const std::vector<double>& p, const std::vector<double>& y, int K, double eps) {
  const int first = K == 1 ? 0 : 1;
  double total = 0.0;
  for (int k = first; k < K; ++k) {
    double inter = 0.0, sp = 0.0, sy = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < p.size(); i += static_cast<std::size_t>(K)) {
      inter += p[i] * y[i];
      sp += p[i];
      sy += y[i];
    }
    total += (2.0 * inter + eps) / (sp + sy + eps);
  }
  return total / (K - first);
}

std::vector<double> random_onehot(std::size_t voxels, int K, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> cls(0, K - 1);
  std::vector<double> y(voxels * static_cast<std::size_t>(K), 0.0);
  for (std::size_t v = 0; v < voxels; ++v) y[v * K + static_cast<std::size_t>(cls(rng))] = 1.0;
  return y;
}

std::vector<double> random_simplex(std::size_t voxels, int K, std::uint32_t seed) {
  auto v = testutil::uniform_values(voxels * static_cast<std::size_t>(K), seed, 0.05, 1.0);
  for (std::size_t i = 0; i < voxels; ++i) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += v[i * K + k];
    for (int k = 0; k < K; ++k) v[i * K + k] /= s;
  }
  return v;
}

io::LabelVolume labels(io::Dims3 d, std::vector<std::uint8_t> l) {
  io::LabelVolume v;
  v.dims = d;
  v.labels = std::move(l);
  return v;
}

}  // namespace

TEST_SUITE("losses-metrics") {

TEST_CASE("soft dice matches a loop oracle") {
  const Shape shape{2, 3, 3, 2, 4};
  const auto p = random_simplex(36, 4, 40);
  const auto y = random_onehot(36, 4, 41);
  const double got = soft_dice_score(constant<double>(shape, p), constant<double>(shape, y)).item();
  CHECK(got == doctest::Approx(dice_oracle(p, y, 4, kDiceEpsilon)).epsilon(1e-12));
  CHECK(dice_loss(constant<double>(shape, p), constant<double>(shape, y)).item() ==
        doctest::Approx(1.0 - dice_oracle(p, y, 4, kDiceEpsilon)).epsilon(1e-12));

  // single channel is the foreground itself
  const Shape s1{1, 4, 2, 2, 1};
  const auto p1 = testutil::uniform_values(16, 42, 0.0, 1.0);
  std::vector<double> y1(16);
  for (std::size_t i = 0; i < 16; ++i) y1[i] = i % 3 == 0 ? 1.0 : 0.0;
  CHECK(soft_dice_score(constant<double>(s1, p1), constant<double>(s1, y1)).item() ==
        doctest::Approx(dice_oracle(p1, y1, 1, kDiceEpsilon)).epsilon(1e-12));
}

TEST_CASE("dice extremes") {
  const Shape shape{1, 4, 4, 4, 4};
  const auto y = random_onehot(64, 4, 43);
  CHECK(dice_loss(constant<double>(shape, y), constant<double>(shape, y)).item() <= 1e-12);
  std::vector<double> off(y.size(), 0.0);
  for (std::size_t v = 0; v < 64; ++v)
    for (int k = 0; k < 4; ++k)
      if (y[v * 4 + k] == 1.0) off[v * 4 + (k + 1) % 4] = 1.0;
  CHECK(dice_loss(constant<double>(shape, off), constant<double>(shape, y)).item() >= 1.0 - 1e-5);
  CHECK_ERROR(dice_loss(constant<double>({1, 2, 2, 2, 4}, std::vector<double>(32, 0.25)), constant<double>(shape, y)),
              ErrorCode::ShapeMismatch);
}

TEST_CASE("cross entropy") {
  const Shape shape{1, 2, 2, 2, 4};
  CHECK(cross_entropy(full<double>(shape, 0.25), constant<double>(shape, random_onehot(8, 4, 44))).item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  // -log p at the true class, averaged
  const auto p = random_simplex(8, 4, 45);
  const auto y = random_onehot(8, 4, 46);
  double expect = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) expect -= y[i] * std::log(p[i]);
  expect /= 8.0;
  CHECK(cross_entropy(constant<double>(shape, p), constant<double>(shape, y)).item() ==
        doctest::Approx(expect).epsilon(1e-12));
  // binary form
  CHECK(cross_entropy(constant<double>({2, 1}, {0.8, 0.3}), constant<double>({2, 1}, {1.0, 0.0})).item() ==
        doctest::Approx(-(std::log(0.8) + std::log(0.7)) / 2).epsilon(1e-12));
  // clamped, stays finite
  CHECK(std::isfinite(cross_entropy(constant<double>({1, 2}, {1.0, 0.0}), constant<double>({1, 2}, {0.0, 1.0})).item()));
}

TEST_CASE("log cosh") {
  const auto v = log_cosh(constant<double>({5}, {1.0, -1.0, 0.0, 30.0, 1e-4}));
  CHECK(v.data()[0] == doctest::Approx(0.433781).epsilon(1e-6));
  CHECK(v.data()[1] == v.data()[0]);
  CHECK(v.data()[2] == 0.0);
  CHECK(v.data()[3] == doctest::Approx(30.0 - std::log(2.0)).epsilon(1e-12));
  CHECK(v.data()[4] == doctest::Approx(0.5e-8).epsilon(1e-6));
  CHECK(std::isfinite(log_cosh(constant<double>({1}, {800.0})).item()));
}

TEST_CASE("composite losses") {
  const Shape shape{1, 2, 2, 2, 4};
  const auto p = constant<double>(shape, random_simplex(8, 4, 47));
  const auto y = constant<double>(shape, random_onehot(8, 4, 48));
  const double dl = dice_loss(p, y).item();
  CHECK(compute_loss(LossKind::Dice, p, y).item() == dl);
  CHECK(compute_loss(LossKind::DiceCrossEntropy, p, y).item() ==
        doctest::Approx(dl + cross_entropy(p, y).item()).epsilon(1e-12));
  CHECK(compute_loss(LossKind::LogCoshDice, p, y).item() == doctest::Approx(std::log(std::cosh(dl))).epsilon(1e-12));
  CHECK(parse_loss("LC") == LossKind::LogCoshDice);
  CHECK(parse_loss("DL+CE") == LossKind::DiceCrossEntropy);
  CHECK(std::string(loss_name(LossKind::CrossEntropy)) == "CE");
  CHECK_ERROR(parse_loss("focal"), ErrorCode::ConfigError);
}

TEST_CASE("loss gradients through softmax") {
  const Shape shape{1, 3, 2, 2, 4};
  const auto y = constant<double>(shape, random_onehot(12, 4, 49));
  for (LossKind kind : {LossKind::Dice, LossKind::CrossEntropy, LossKind::DiceCrossEntropy, LossKind::LogCoshDice}) {
    ParamSet<double> params;
    testutil::add_random(params, "logits", shape, 50, 2.0);
    auto f = [&](const BoundParams<double>& b) { return compute_loss(kind, layers::softmax_channels(b["logits"]), y); };
    CHECK(finite_diff_check(f, params).max_rel_error <= 1e-4);
  }
}

TEST_CASE("dice metric") {
  const std::vector<std::uint8_t> a{1, 1, 0, 0}, b{1, 0, 1, 0}, none{0, 0, 0, 0};
  CHECK(dice_metric(a, a) == 1.0);
  CHECK(dice_metric(a, b) == 0.5);
  CHECK(dice_metric(none, none) == 1.0);
  CHECK(dice_metric(a, none) == 0.0);
}

TEST_CASE("region dice and reports") {
  const io::Dims3 d{6, 1, 1};
  const auto truth = labels(d, {0, 1, 2, 3, 3, 2});
  const auto pred = labels(d, {0, 1, 2, 2, 3, 0});
  // whole: pred {1,2,3,4}, truth {1,2,3,4,5} -> 8/9
  CHECK(region_dice(pred, truth, Region::Whole) == doctest::Approx(8.0 / 9.0));
  // core: pred {1,4}, truth {1,3,4} -> 4/5
  CHECK(region_dice(pred, truth, Region::Core) == doctest::Approx(0.8));
  // enhancing: pred {4}, truth {3,4} -> 2/3
  CHECK(region_dice(pred, truth, Region::Enhancing) == doctest::Approx(2.0 / 3.0));
  const auto r = case_report(pred, truth, "c");
  CHECK(r.mean == doctest::Approx((8.0 / 9.0 + 0.8 + 2.0 / 3.0) / 3));
  CHECK(in_region(1, Region::Core));
  CHECK_FALSE(in_region(2, Region::Core));
  CHECK_ERROR(region_dice(pred, labels({3, 2, 1}, {0, 0, 0, 0, 0, 0}), Region::Whole), ErrorCode::GridMismatch);

  const auto agg = aggregate({case_report(truth, truth, "a"), r});
  CHECK(agg.cases.size() == 2);
  CHECK(agg.mean.whole == doctest::Approx((1.0 + 8.0 / 9.0) / 2));
  CHECK(agg.mean.mean == doctest::Approx((1.0 + r.mean) / 2));
}

}  // TEST_SUITE
