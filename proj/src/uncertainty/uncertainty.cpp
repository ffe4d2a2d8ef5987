#include "uncertainty/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace gliomaseg::uncertainty {

template <typename T>
T energy(std::span<const T> logits) {
  if (logits.empty()) fail(ErrorCode::ShapeMismatch, "energy of an empty logit vector");
  const T mx = *std::max_element(logits.begin(), logits.end());
  T s = T(0);
  for (T f : logits) s += std::exp(f - mx);
  return -(mx + std::log(s));
}

template <typename T>
T softmax_energy_identity_check(std::span<const T> logits, int classes) {
  if (classes < 1 || logits.size() % static_cast<std::size_t>(classes) != 0) {
    fail(ErrorCode::ShapeMismatch, "logit count is not a multiple of the class count");
  }
  const std::size_t k = static_cast<std::size_t>(classes);
  std::vector<T> soft(k);
  T worst = T(0);
  for (std::size_t v = 0; v < logits.size() / k; ++v) {
    auto f = logits.subspan(v * k, k);
    const T shift = *std::max_element(f.begin(), f.end());
    T z = T(0);
    for (std::size_t i = 0; i < k; ++i) {
      soft[i] = std::exp(f[i] - shift);
      z += soft[i];
    }
    T best = T(0);
    for (std::size_t i = 0; i < k; ++i) best = std::max(best, soft[i] / z);
    const T lhs = std::log(best);
    const T rhs = energy(f) + shift;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

std::vector<float> energy_field(const io::ChannelVolume& logits) {
  const std::size_t n = logits.dims.count();
  std::vector<float> out(n);
  std::vector<float> f(static_cast<std::size_t>(logits.channels));
  for (std::size_t v = 0; v < n; ++v) {
    for (int c = 0; c < logits.channels; ++c) f[static_cast<std::size_t>(c)] = logits.data[c * n + v];
    out[v] = energy<float>(f);
  }
  return out;
}

std::vector<float> confidence_map(const io::ChannelVolume& mean_logits) {
  std::vector<float> e = energy_field(mean_logits);
  for (auto& x : e) x = -x;
  return e;
}

models::Prediction tta_aggregate(const models::PatchPredictor& predict, const io::ChannelVolume& input,
                                 const std::array<int, augment::kTtaVariantCount>& order) {
  std::vector<double> prob_acc, logit_acc;
  io::Dims3 dims;
  int prob_c = 0, logit_c = 0;
  std::array<bool, augment::kTtaVariantCount> seen{};
  for (int id : order) {
    const augment::TtaVariant variant = augment::TtaVariant::from_id(id);
    if (seen[static_cast<std::size_t>(id)]) fail(ErrorCode::BadVariantId, "TTA order repeats a variant");
    seen[static_cast<std::size_t>(id)] = true;
    models::Prediction p = predict(augment::tta_apply(input, variant));
    const io::ChannelVolume probs = augment::tta_invert(p.probs, variant);
    const io::ChannelVolume logits = augment::tta_invert(p.logits, variant);
    if (prob_acc.empty()) {
      dims = probs.dims;
      prob_c = probs.channels;
      logit_c = logits.channels;
      prob_acc.assign(probs.data.size(), 0.0);
      logit_acc.assign(logits.data.size(), 0.0);
    }
    for (std::size_t i = 0; i < prob_acc.size(); ++i) prob_acc[i] += probs.data[i];
    for (std::size_t i = 0; i < logit_acc.size(); ++i) logit_acc[i] += logits.data[i];
  }
  const double inv = 1.0 / augment::kTtaVariantCount;
  models::Prediction out{io::ChannelVolume(dims, prob_c), io::ChannelVolume(dims, logit_c)};
  for (std::size_t i = 0; i < prob_acc.size(); ++i) out.probs.data[i] = static_cast<float>(prob_acc[i] * inv);
  for (std::size_t i = 0; i < logit_acc.size(); ++i) out.logits.data[i] = static_cast<float>(logit_acc[i] * inv);
  return out;
}

template float energy<float>(std::span<const float>);
template double energy<double>(std::span<const double>);
template float softmax_energy_identity_check<float>(std::span<const float>, int);
template double softmax_energy_identity_check<double>(std::span<const double>, int);

}  // namespace gliomaseg::uncertainty
