#include "optim/optim.hpp"

#include <cmath>

#include "common/error.hpp"

namespace gliomaseg::optim {

namespace {

void check_lengths(std::span<float> params, std::span<const float> grads, const char* who) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::LengthMismatch, std::string(who) + ": " + std::to_string(params.size()) + " parameters, " +
                                        std::to_string(grads.size()) + " gradients");
  }
}

void ensure_size(std::vector<float>& v, std::size_t n, const char* who) {
  if (v.empty()) v.assign(n, 0.0f);
  if (v.size() != n) {
    fail(ErrorCode::LengthMismatch, std::string(who) + ": state sized for " + std::to_string(v.size()) +
                                        " parameters, got " + std::to_string(n));
  }
}

const std::vector<float>& array_or_fail(const OptimState& s, const std::string& key) {
  auto it = s.arrays.find(key);
  if (it == s.arrays.end()) fail(ErrorCode::CheckpointMismatch, "optimizer state lacks " + key);
  return it->second;
}

const nlohmann::json& meta_or_fail(const OptimState& s, const std::string& prefix) {
  if (!s.meta.contains(prefix)) fail(ErrorCode::CheckpointMismatch, "optimizer state lacks " + prefix);
  return s.meta.at(prefix);
}

void expect_kind(const nlohmann::json& meta, const std::string& kind) {
  if (meta.value("kind", std::string()) != kind) {
    fail(ErrorCode::CheckpointMismatch,
         "optimizer state is for " + meta.value("kind", std::string("?")) + ", expected " + kind);
  }
}

// Shared first/second moment recurrence.
void update_moments(std::vector<float>& m, std::vector<float>& v, std::span<const float> g, const AdamConfig& c) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gi = g[i];
    m[i] = static_cast<float>(c.beta1 * m[i] + (1.0 - c.beta1) * gi);
    v[i] = static_cast<float>(c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi);
  }
}

}  // namespace

void Sgd::step(std::span<float> params, std::span<const float> grads) {
  check_lengths(params, grads, "SGD");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= static_cast<float>(lr_ * grads[i]);
}

void Sgd::save(OptimState& state, const std::string& prefix) const {
  state.meta[prefix] = {{"kind", "SGD"}, {"lr", lr_}};
}

void Sgd::load(const OptimState& state, const std::string& prefix) {
  expect_kind(meta_or_fail(state, prefix), "SGD");
}

void Adam::step(std::span<float> params, std::span<const float> grads) {
  check_lengths(params, grads, "Adam");
  ensure_size(m_, params.size(), "Adam");
  ensure_size(v_, params.size(), "Adam");
  ++t_;
  update_moments(m_, v_, grads, cfg_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double mh = m_[i] / c1;
    const double vh = v_[i] / c2;
    params[i] -= static_cast<float>(cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
  }
}

void Adam::save(OptimState& state, const std::string& prefix) const {
  state.meta[prefix] = {{"kind", "A"},          {"t", t_},          {"lr", cfg_.lr},
                        {"beta1", cfg_.beta1}, {"beta2", cfg_.beta2}, {"eps", cfg_.eps}};
  state.arrays[prefix + "/m"] = m_;
  state.arrays[prefix + "/v"] = v_;
}

void Adam::load(const OptimState& state, const std::string& prefix) {
  const auto& meta = meta_or_fail(state, prefix);
  expect_kind(meta, "A");
  t_ = meta.at("t").get<std::int64_t>();
  m_ = array_or_fail(state, prefix + "/m");
  v_ = array_or_fail(state, prefix + "/v");
}

double radam_rho_inf(double beta2) { return 2.0 / (1.0 - beta2) - 1.0; }

double radam_rho(std::int64_t t, double beta2) {
  const double rho_inf = radam_rho_inf(beta2);
  if (t <= 0) return rho_inf;
  const double bt = std::pow(beta2, static_cast<double>(t));
  return rho_inf - 2.0 * static_cast<double>(t) * bt / (1.0 - bt);
}

void RAdam::step(std::span<float> params, std::span<const float> grads) {
  check_lengths(params, grads, "RAdam");
  ensure_size(m_, params.size(), "RAdam");
  ensure_size(v_, params.size(), "RAdam");
  ++t_;
  update_moments(m_, v_, grads, cfg_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double rho_inf = radam_rho_inf(cfg_.beta2);
  const double rho = radam_rho(t_, cfg_.beta2);
  last_adaptive_ = rho > 4.0;
  if (last_adaptive_) {
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double r = std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double mh = m_[i] / c1;
      const double vh = v_[i] / c2;
      params[i] -= static_cast<float>(cfg_.lr * r * mh / (std::sqrt(vh) + cfg_.eps));
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= static_cast<float>(cfg_.lr * (m_[i] / c1));
  }
}

void RAdam::save(OptimState& state, const std::string& prefix) const {
  state.meta[prefix] = {{"kind", "RA"},         {"t", t_},          {"lr", cfg_.lr},
                        {"beta1", cfg_.beta1}, {"beta2", cfg_.beta2}, {"eps", cfg_.eps}};
  state.arrays[prefix + "/m"] = m_;
  state.arrays[prefix + "/v"] = v_;
}

void RAdam::load(const OptimState& state, const std::string& prefix) {
  const auto& meta = meta_or_fail(state, prefix);
  expect_kind(meta, "RA");
  t_ = meta.at("t").get<std::int64_t>();
  m_ = array_or_fail(state, prefix + "/m");
  v_ = array_or_fail(state, prefix + "/v");
}

Lookahead::Lookahead(std::unique_ptr<Optimizer> inner, int k, double alpha)
    : inner_(std::move(inner)), k_(k), alpha_(alpha) {
  if (!inner_) fail(ErrorCode::ConfigError, "Lookahead needs an inner optimizer");
  if (k_ < 1) fail(ErrorCode::ConfigError, "Lookahead k must be >= 1");
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) fail(ErrorCode::ConfigError, "Lookahead alpha must lie in [0, 1]");
}

std::string Lookahead::name() const {
  const std::string in = inner_->name();
  return in == "RA" ? "R" : in + "+LH";
}

void Lookahead::step(std::span<float> params, std::span<const float> grads) {
  check_lengths(params, grads, "Lookahead");
  if (slow_.empty()) slow_.assign(params.begin(), params.end());
  if (slow_.size() != params.size()) fail(ErrorCode::LengthMismatch, "Lookahead: parameter count changed");
  inner_->step(params, grads);
  ++counter_;
  if (counter_ % k_ != 0) return;
  const float a = static_cast<float>(alpha_);
  const float b = 1.0f - a;
  for (std::size_t i = 0; i < params.size(); ++i) {
    slow_[i] = b * slow_[i] + a * params[i];
    params[i] = slow_[i];
  }
}

void Lookahead::save(OptimState& state, const std::string& prefix) const {
  state.meta[prefix] = {{"kind", "LH"}, {"k", k_}, {"alpha", alpha_}, {"counter", counter_}};
  state.arrays[prefix + "/slow"] = slow_;
  inner_->save(state, prefix + "/inner");
}

void Lookahead::load(const OptimState& state, const std::string& prefix) {
  const auto& meta = meta_or_fail(state, prefix);
  expect_kind(meta, "LH");
  counter_ = meta.at("counter").get<std::int64_t>();
  slow_ = array_or_fail(state, prefix + "/slow");
  inner_->load(state, prefix + "/inner");
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec) {
  AdamConfig cfg;
  cfg.lr = spec.lr;
  if (!(spec.lr > 0.0)) fail(ErrorCode::ConfigError, "learning rate must be positive");
  if (spec.name == "A") return std::make_unique<Adam>(cfg);
  if (spec.name == "RA") return std::make_unique<RAdam>(cfg);
  if (spec.name == "R") {
    return std::make_unique<Lookahead>(std::make_unique<RAdam>(cfg), spec.lookahead_k, spec.lookahead_alpha);
  }
  if (spec.name == "A+LH") {
    return std::make_unique<Lookahead>(std::make_unique<Adam>(cfg), spec.lookahead_k, spec.lookahead_alpha);
  }
  if (spec.name == "SGD") return std::make_unique<Sgd>(spec.lr);
  fail(ErrorCode::ConfigError, "unknown optimizer '" + spec.name + "' (expected A, RA, R or A+LH)");
}

}  // namespace gliomaseg::optim
