#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "optim/optim.hpp"
#include "test_util.hpp"

using namespace gliomaseg;
using namespace gliomaseg::optim;

namespace {

std::vector<float> grad_at(const std::vector<float>& p, int t) {
  std::vector<float> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = p[i] - 0.1f * static_cast<float>(i) + 0.05f * std::cos(float(t + i));
  return g;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("sgd") {
  Sgd s(0.5);
  std::vector<float> p{1.0f, -2.0f};
  s.step(p, std::vector<float>{1.0f, 1.0f});
  CHECK(p == std::vector<float>{0.5f, -2.5f});
  CHECK_ERROR(s.step(p, std::vector<float>{1.0f}), ErrorCode::LengthMismatch);
}

TEST_CASE("adam against a scalar recurrence") {
  // Written out for one coordinate, all in double.
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Adam a({lr, b1, b2, eps});
  std::vector<float> p{0.7f};
  double m = 0.0, v = 0.0;
  double q = 0.7;
  for (int t = 1; t <= 20; ++t) {
    const float g = static_cast<float>(std::sin(t) + 0.3);
    a.step(p, std::vector<float>{g});
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    q -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    CHECK(p[0] == doctest::Approx(q).epsilon(1e-5));
  }
  CHECK(a.t() == 20);
  // first step is lr * sign(g) in magnitude
  Adam first({lr, b1, b2, eps});
  std::vector<float> r{0.0f};
  first.step(r, std::vector<float>{-3.0f});
  CHECK(r[0] == doctest::Approx(lr).epsilon(1e-6));
}

TEST_CASE("radam rho and warmup") {
  CHECK(radam_rho_inf(0.999) == doctest::Approx(1999.0));
  CHECK(radam_rho(1, 0.999) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(radam_rho(4, 0.999) == doctest::Approx(3.9974987498546852).epsilon(1e-9));
  CHECK(radam_rho(5, 0.999) == doctest::Approx(4.995998000395048).epsilon(1e-9));
  CHECK(radam_rho(0, 0.999) == radam_rho_inf(0.999));

  RAdam r({1e-3, 0.9, 0.999, 1e-8});
  std::vector<float> p{1.0f};
  for (int t = 1; t <= 6; ++t) {
    r.step(p, std::vector<float>{0.5f});
    CHECK(r.last_step_adaptive() == (t >= 5));
  }
  // momentum-only steps: m_hat == g for a constant gradient
  RAdam s({1e-2, 0.9, 0.999, 1e-8});
  std::vector<float> q{1.0f};
  for (int t = 1; t <= 4; ++t) s.step(q, std::vector<float>{2.0f});
  CHECK(q[0] == doctest::Approx(1.0 - 4 * 1e-2 * 2.0).epsilon(1e-6));
}

TEST_CASE("lookahead synchronisation") {
  // f = p^2 / 2 under SGD lr 0.5, k 2, alpha 0.5: dyadic values, exact in float.
  Lookahead la(std::make_unique<Sgd>(0.5), 2, 0.5);
  std::vector<float> p{1.0f};
  const std::vector<float> expect{0.5f, 0.625f, 0.3125f, 0.390625f, 0.1953125f, 0.1953125f * 0.25f + 0.390625f * 0.5f};
  for (float e : expect) {
    la.step(p, std::vector<float>{p[0]});
    CHECK(p[0] == e);
  }
  CHECK(la.slow_weights()[0] == expect.back());
  CHECK(la.name() == "SGD+LH");
}

TEST_CASE("lookahead with unit gradient") {
  // SGD lr 1 on g = 1: two inner steps reach phi0 - 2, the sync lands on phi0 - 1.
  Lookahead la(std::make_unique<Sgd>(1.0), 2, 0.5);
  std::vector<float> p{3.0f};
  la.step(p, std::vector<float>{1.0f});
  CHECK(p[0] == 2.0f);
  la.step(p, std::vector<float>{1.0f});
  CHECK(p[0] == 2.0f);
  CHECK(la.slow_weights()[0] == 2.0f);
}

TEST_CASE("lookahead edge weights") {
  std::vector<float> init{0.3f, -0.2f, 0.9f};
  Adam bare({1e-2, 0.9, 0.999, 1e-8});
  Lookahead one(std::make_unique<Adam>(AdamConfig{1e-2, 0.9, 0.999, 1e-8}), 3, 1.0);
  Lookahead zero(std::make_unique<Adam>(AdamConfig{1e-2, 0.9, 0.999, 1e-8}), 1, 0.0);
  auto a = init, b = init, c = init;
  for (int t = 0; t < 30; ++t) {
    bare.step(a, grad_at(a, t));
    one.step(b, grad_at(b, t));
    zero.step(c, grad_at(c, t));
    CHECK(a == b);
    CHECK(c == init);
  }
  CHECK_ERROR(Lookahead(std::make_unique<Sgd>(1.0), 0, 0.5), ErrorCode::ConfigError);
  CHECK_ERROR(Lookahead(std::make_unique<Sgd>(1.0), 2, 1.5), ErrorCode::ConfigError);
}

TEST_CASE("adam step size under a constant gradient") {
  Adam a({1e-3, 0.9, 0.999, 1e-8});
  std::vector<float> p{0.0f};
  for (int t = 0; t < 2000; ++t) {
    const float before = p[0];
    a.step(p, std::vector<float>{-0.25f});
    CHECK(p[0] - before == doctest::Approx(1e-3).epsilon(1e-3));
  }
}

TEST_CASE("every optimizer descends on a quadratic") {
  // Lookahead variants: the slow weights descend at every sync and the fast
  // weights between syncs; the sync itself pulls the fast weights back.
  for (const char* name : {"A", "RA", "R", "A+LH"}) {
    const bool lookahead = std::string(name) == "R" || std::string(name) == "A+LH";
    auto opt = make_optimizer({name, 3e-4, 5, 0.5});
    std::vector<float> p{1.0f, -2.0f, 0.5f, 3.0f};
    auto f = [&] {
      double s = 0.0;
      for (float x : p) s += double(x) * x;
      return s;
    };
    double prev = f(), prev_sync = f();
    for (int t = 1; t <= 200; ++t) {
      std::vector<float> g(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2.0f * p[i];
      opt->step(p, g);
      const double now = f();
      const bool sync = lookahead && t % 5 == 0;
      if (t > 10) CHECK(now < (sync ? prev_sync : prev));
      if (sync) prev_sync = now;
      prev = now;
    }
  }
}

TEST_CASE("factory names") {
  CHECK(make_optimizer({"A", 1e-3})->name() == "A");
  CHECK(make_optimizer({"RA", 1e-3})->name() == "RA");
  CHECK(make_optimizer({"R", 1e-3})->name() == "R");
  CHECK(make_optimizer({"A+LH", 1e-3})->name() == "A+LH");
  CHECK_ERROR(make_optimizer({"Adagrad", 1e-3}), ErrorCode::ConfigError);
  CHECK_ERROR(make_optimizer({"A", 0.0}), ErrorCode::ConfigError);
}

TEST_CASE("state save and resume continue the same trajectory") {
  for (const char* name : {"A", "RA", "R", "A+LH"}) {
    auto full = make_optimizer({name, 1e-2, 3, 0.5});
    auto first = make_optimizer({name, 1e-2, 3, 0.5});
    std::vector<float> p{0.4f, -0.6f}, q = p;
    for (int t = 0; t < 7; ++t) {
      full->step(p, grad_at(p, t));
      first->step(q, grad_at(q, t));
    }
    OptimState state;
    first->save(state, "opt");
    auto resumed = make_optimizer({name, 1e-2, 3, 0.5});
    resumed->load(state, "opt");
    for (int t = 7; t < 15; ++t) {
      full->step(p, grad_at(p, t));
      resumed->step(q, grad_at(q, t));
    }
    CHECK(p == q);
  }
  OptimState s;
  Adam().save(s, "opt");
  RAdam r;
  CHECK_ERROR(r.load(s, "opt"), ErrorCode::CheckpointMismatch);
  CHECK_ERROR(r.load(s, "missing"), ErrorCode::CheckpointMismatch);
}

}  // TEST_SUITE
