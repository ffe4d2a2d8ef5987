#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gliomaseg::optim {

/// Serializable optimizer state: scalar fields plus named flat arrays.
struct OptimState {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, std::vector<float>> arrays;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;

  /// Updates `params` in place from `grads`; lengths must agree.
  virtual void step(std::span<float> params, std::span<const float> grads) = 0;
  virtual std::string name() const = 0;

  virtual void save(OptimState& state, const std::string& prefix) const = 0;
  virtual void load(const OptimState& state, const std::string& prefix) = 0;
};

/// Plain gradient descent, p -= lr * g.
class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<float> params, std::span<const float> grads) override;
  std::string name() const override { return "SGD"; }
  void save(OptimState& state, const std::string& prefix) const override;
  void load(const OptimState& state, const std::string& prefix) override;

 private:
  double lr_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam.
class Adam final : public Optimizer {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::span<float> params, std::span<const float> grads) override;
  std::string name() const override { return "A"; }
  void save(OptimState& state, const std::string& prefix) const override;
  void load(const OptimState& state, const std::string& prefix) override;

  std::int64_t t() const { return t_; }
  const std::vector<float>& m() const { return m_; }
  const std::vector<float>& v() const { return v_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<float> m_, v_;
};

/// Length of the approximated simple moving average, rho_t; rho_inf when t is 0.
double radam_rho(std::int64_t t, double beta2);
double radam_rho_inf(double beta2);

/// Rectified Adam: adaptive step scaled by r_t once rho_t > 4, bias-corrected
/// momentum step before that.
class RAdam final : public Optimizer {
 public:
  explicit RAdam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::span<float> params, std::span<const float> grads) override;
  std::string name() const override { return "RA"; }
  void save(OptimState& state, const std::string& prefix) const override;
  void load(const OptimState& state, const std::string& prefix) override;

  std::int64_t t() const { return t_; }
  /// Whether the most recent step used the rectified adaptive update.
  bool last_step_adaptive() const { return last_adaptive_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  bool last_adaptive_ = false;
  std::vector<float> m_, v_;
};

/// The inner optimizer moves the fast weights every call; every
/// k-th call the slow weights move toward them, phi <- (1 - alpha) phi +
/// alpha theta, and the fast weights restart from phi.
class Lookahead final : public Optimizer {
 public:
  Lookahead(std::unique_ptr<Optimizer> inner, int k = 5, double alpha = 0.5);
  void step(std::span<float> params, std::span<const float> grads) override;
  std::string name() const override;
  void save(OptimState& state, const std::string& prefix) const override;
  void load(const OptimState& state, const std::string& prefix) override;

  const std::vector<float>& slow_weights() const { return slow_; }
  const Optimizer& inner() const { return *inner_; }

 private:
  std::unique_ptr<Optimizer> inner_;
  int k_;
  double alpha_;
  std::int64_t counter_ = 0;
  std::vector<float> slow_;
};

struct OptimizerSpec {
  std::string name = "A";  // A, RA, R, A+LH, SGD
  double lr = 3e-4;
  int lookahead_k = 5;
  double lookahead_alpha = 0.5;
};

/// "R" is Lookahead(RAdam) and "A+LH" is Lookahead(Adam).
std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec);

}  // namespace gliomaseg::optim
