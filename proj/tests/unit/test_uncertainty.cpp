#include <cmath>
#include <vector>

#include "doctest.h"
#include "grad_helpers.hpp"
#include "test_util.hpp"
#include "uncertainty/uncertainty.hpp"

using namespace gliomaseg;
using namespace gliomaseg::uncertainty;

namespace {

io::ChannelVolume random_volume(io::Dims3 d, int c, std::uint32_t seed) {
  io::ChannelVolume v(d, c);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  for (auto& x : v.data) x = u(rng);
  return v;
}

// Depends on position, so reflections change it.
models::Prediction positional(const io::ChannelVolume& in) {
  models::Prediction p;
  p.logits = io::ChannelVolume(in.dims, 4);
  for (int z = 0; z < in.dims.z; ++z)
    for (int y = 0; y < in.dims.y; ++y)
      for (int x = 0; x < in.dims.x; ++x)
        for (int k = 0; k < 4; ++k) p.logits.at(k, x, y, z) = in.at(0, x, y, z) * float(k) + 0.1f * float(x + 2 * y * k + z);
  p.probs = p.logits;
  return p;
}

}  // namespace

TEST_SUITE("uncertainty") {

TEST_CASE("energy values") {
  const std::vector<double> zeros(4, 0.0);
  CHECK(energy<double>(zeros) == doctest::Approx(-std::log(4.0)));
  const std::vector<double> f{1.0, 2.0, 3.0};
  CHECK(energy<double>(f) == doctest::Approx(-std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));
  const std::vector<float> big{1000.0f, 1000.0f};
  CHECK(energy<float>(big) == doctest::Approx(-1000.0 - std::log(2.0)));
  const std::vector<float> small{-1000.0f, -2000.0f};
  CHECK(std::isfinite(energy<float>(small)));
}

TEST_CASE("identity check and fields") {
  const auto v = testutil::uniform_values(400, 80, -15.0, 15.0);
  CHECK(softmax_energy_identity_check<double>(v, 4) <= 1e-12);
  CHECK_ERROR(softmax_energy_identity_check<double>(std::vector<double>(7, 0.0), 4), ErrorCode::ShapeMismatch);

  const auto logits = random_volume({3, 2, 2}, 4, 81);
  const auto e = energy_field(logits);
  const auto c = confidence_map(logits);
  REQUIRE(e.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    std::vector<float> f(4);
    for (int k = 0; k < 4; ++k) f[k] = logits.data[static_cast<std::size_t>(k) * 12 + i];
    CHECK(e[i] == doctest::Approx(energy<float>(f)));
    CHECK(c[i] == -e[i]);
  }
}

TEST_CASE("tta aggregate") {
  const auto in = random_volume({4, 3, 5}, 2, 82);
  const auto a = tta_aggregate(positional, in);
  const auto b = tta_aggregate(positional, in, {7, 6, 5, 4, 3, 2, 1, 0});
  REQUIRE(a.probs.data.size() == b.probs.data.size());
  for (std::size_t i = 0; i < a.probs.data.size(); ++i) CHECK(std::abs(a.probs.data[i] - b.probs.data[i]) <= 1e-6f);

  // explicit oracle: average of inverted predictions on flipped inputs
  io::ChannelVolume sum(in.dims, 4);
  for (int id = 0; id < augment::kTtaVariantCount; ++id) {
    const auto t = augment::TtaVariant::from_id(id);
    const auto out = augment::tta_invert(positional(augment::tta_apply(in, t)).logits, t);
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += out.data[i] / 8.0f;
  }
  for (std::size_t i = 0; i < sum.data.size(); ++i) CHECK(a.logits.data[i] == doctest::Approx(sum.data[i]).epsilon(1e-5));

  // equivariant predictor: aggregate equals the plain prediction
  const models::PatchPredictor pointwise = [](const io::ChannelVolume& v) {
    models::Prediction p;
    p.logits = io::ChannelVolume(v.dims, 2);
    p.logits.data = v.data;
    p.probs = p.logits;
    return p;
  };
  const auto eq = tta_aggregate(pointwise, in);
  for (std::size_t i = 0; i < in.data.size(); ++i) CHECK(eq.logits.data[i] == doctest::Approx(in.data[i]).epsilon(1e-6));
}

}  // TEST_SUITE
