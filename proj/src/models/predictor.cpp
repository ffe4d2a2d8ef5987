#include "models/predictor.hpp"

#include "common/error.hpp"

namespace gliomaseg::models {

using io::ChannelVolume;
using io::Dims3;

ad::Tensor<float> to_tensor(const std::vector<const ChannelVolume*>& batch) {
  if (batch.empty()) fail(ErrorCode::ShapeMismatch, "empty batch");
  const Dims3 d = batch[0]->dims;
  const int c = batch[0]->channels;
  const std::size_t per = d.count() * static_cast<std::size_t>(c);
  std::vector<float> out(per * batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const ChannelVolume& v = *batch[n];
    if (!(v.dims == d) || v.channels != c) fail(ErrorCode::ShapeMismatch, "batch items differ in shape");
    float* o = out.data() + n * per;
    for (int ch = 0; ch < c; ++ch) {
      const float* src = v.data.data() + static_cast<std::size_t>(ch) * d.count();
      for (int z = 0; z < d.z; ++z)
        for (int y = 0; y < d.y; ++y)
          for (int x = 0; x < d.x; ++x) {
            o[((static_cast<std::size_t>(x) * d.y + y) * d.z + z) * c + ch] = src[io::voxel_index(d, x, y, z)];
          }
    }
  }
  return ad::constant<float>({static_cast<int>(batch.size()), d.x, d.y, d.z, c}, std::move(out));
}

ad::Tensor<float> to_tensor(const ChannelVolume& v) { return to_tensor(std::vector<const ChannelVolume*>{&v}); }

ChannelVolume from_tensor(const ad::Tensor<float>& t, int item) {
  if (t.rank() != 5) fail(ErrorCode::ShapeMismatch, "expected a rank-5 tensor");
  const Dims3 d{t.dim(1), t.dim(2), t.dim(3)};
  const int c = t.dim(4);
  ChannelVolume v(d, c);
  const float* src = t.data().data() + static_cast<std::size_t>(item) * d.count() * static_cast<std::size_t>(c);
  for (int x = 0; x < d.x; ++x)
    for (int y = 0; y < d.y; ++y)
      for (int z = 0; z < d.z; ++z) {
        const float* s = src + ((static_cast<std::size_t>(x) * d.y + y) * d.z + z) * c;
        for (int ch = 0; ch < c; ++ch) v.at(ch, x, y, z) = s[ch];
      }
  return v;
}

Prediction predict_grid(const UNet& model, const ChannelVolume& input) {
  const auto bound = model.params().bind(nullptr);
  const ForwardResult<float> r = model.forward(bound, to_tensor(input));
  return {from_tensor(r.probs), from_tensor(r.logits)};
}

PatchPredictor model_predictor(const UNet& model) {
  return [&model](const ChannelVolume& input) { return predict_grid(model, input); };
}

std::vector<int> window_starts(int extent, int patch, int overlap) {
  if (patch > extent) {
    fail(ErrorCode::PatchLargerThanVolume,
         "patch extent " + std::to_string(patch) + " exceeds volume extent " + std::to_string(extent));
  }
  if (overlap < 0 || overlap >= patch) fail(ErrorCode::ConfigError, "patch overlap must lie in [0, patch)");
  const int stride = patch - overlap;
  std::vector<int> starts;
  for (int s = 0; s + patch <= extent; s += stride) starts.push_back(s);
  if (starts.back() + patch < extent) starts.push_back(extent - patch);
  return starts;
}

ChannelVolume extract_patch(const ChannelVolume& v, const Dims3& origin, const Dims3& size) {
  ChannelVolume out(size, v.channels);
  for (int c = 0; c < v.channels; ++c)
    for (int z = 0; z < size.z; ++z)
      for (int y = 0; y < size.y; ++y)
        for (int x = 0; x < size.x; ++x) out.at(c, x, y, z) = v.at(c, origin.x + x, origin.y + y, origin.z + z);
  return out;
}

Prediction sliding_window_predict(const PatchPredictor& predict, const ChannelVolume& input, const PatchSpec& spec) {
  const Dims3 d = input.dims;
  const auto xs = window_starts(d.x, spec.patch.x, spec.overlap.x);
  const auto ys = window_starts(d.y, spec.patch.y, spec.overlap.y);
  const auto zs = window_starts(d.z, spec.patch.z, spec.overlap.z);
  std::vector<double> prob_acc, logit_acc;
  std::vector<int> count(d.count(), 0);
  int prob_c = 0, logit_c = 0;
  for (int oz : zs)
    for (int oy : ys)
      for (int ox : xs) {
        const Prediction p = predict(extract_patch(input, {ox, oy, oz}, spec.patch));
        if (prob_acc.empty()) {
          prob_c = p.probs.channels;
          logit_c = p.logits.channels;
          prob_acc.assign(d.count() * static_cast<std::size_t>(prob_c), 0.0);
          logit_acc.assign(d.count() * static_cast<std::size_t>(logit_c), 0.0);
        }
        for (int z = 0; z < spec.patch.z; ++z)
          for (int y = 0; y < spec.patch.y; ++y)
            for (int x = 0; x < spec.patch.x; ++x) {
              const std::size_t g = io::voxel_index(d, ox + x, oy + y, oz + z);
              ++count[g];
              for (int c = 0; c < prob_c; ++c) prob_acc[c * d.count() + g] += p.probs.at(c, x, y, z);
              for (int c = 0; c < logit_c; ++c) logit_acc[c * d.count() + g] += p.logits.at(c, x, y, z);
            }
      }
  Prediction out{ChannelVolume(d, prob_c), ChannelVolume(d, logit_c)};
  for (std::size_t i = 0; i < prob_acc.size(); ++i) {
    out.probs.data[i] = static_cast<float>(prob_acc[i] / count[i % d.count()]);
  }
  for (std::size_t i = 0; i < logit_acc.size(); ++i) {
    out.logits.data[i] = static_cast<float>(logit_acc[i] / count[i % d.count()]);
  }
  return out;
}

}  // namespace gliomaseg::models
