#include "models/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"
#include "io/endian.hpp"

namespace gliomaseg::models {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void append_floats(std::vector<std::uint8_t>& out, const std::vector<float>& v) {
  const std::size_t base = out.size();
  out.resize(base + v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) io::store_le<float>(out.data() + base + 4 * i, v[i]);
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const UNet& model, nlohmann::json meta,
                     const optim::OptimState* optimizer) {
  meta["model"] = model.config().to_json();
  nlohmann::json entries = nlohmann::json::array();
  std::vector<std::uint8_t> payload;
  auto add = [&](const std::string& name, const ad::Shape& shape, const std::vector<float>& v) {
    entries.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}, {"count", v.size()}});
    append_floats(payload, v);
  };
  const auto& params = model.params();
  for (const auto& e : params.entries()) {
    auto span = params.values(e.name);
    add("param/" + e.name, e.shape, std::vector<float>(span.begin(), span.end()));
  }
  if (optimizer) {
    meta["optimizer"] = optimizer->meta;
    for (const auto& [key, values] : optimizer->arrays) {
      add("optim/" + key, {static_cast<int>(values.size())}, values);
    }
  }
  meta["arrays"] = entries;
  const std::string header = meta.dump();

  std::vector<std::uint8_t> prefix(8 + 4 + 8);
  std::memcpy(prefix.data(), kMagic, 8);
  io::store_le<std::uint32_t>(prefix.data() + 8, kCheckpointVersion);
  io::store_le<std::uint64_t>(prefix.data() + 12, header.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(prefix.data()), static_cast<std::streamsize>(prefix.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorCode::IoFailure, "short write to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    fail(ErrorCode::CheckpointMismatch, path.string() + " is not a checkpoint");
  }
  const auto version = io::load_le<std::uint32_t>(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::CheckpointMismatch, "checkpoint version " + std::to_string(version) + " is unsupported");
  }
  const auto header_len = io::load_le<std::uint64_t>(bytes.data() + 12);
  if (header_len > bytes.size() - 20) fail(ErrorCode::CheckpointMismatch, "checkpoint header is truncated");
  Checkpoint ck;
  try {
    ck.meta = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(header_len));
    const std::size_t base = 20 + header_len;
    for (const auto& e : ck.meta.at("arrays")) {
      NamedArray a;
      a.name = e.at("name").get<std::string>();
      a.shape = e.at("shape").get<ad::Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      if (count != ad::numel(a.shape) || base + offset + 4 * count > bytes.size()) {
        fail(ErrorCode::CheckpointMismatch, "checkpoint array " + a.name + " is inconsistent or truncated");
      }
      a.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) a.values[i] = io::load_le<float>(bytes.data() + base + offset + 4 * i);
      ck.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CheckpointMismatch, std::string("checkpoint header: ") + e.what());
  }
  return ck;
}

void load_parameters(UNet& model, const Checkpoint& ckpt) {
  auto& params = model.params();
  std::size_t stored = 0;
  for (const auto& a : ckpt.arrays) stored += a.name.rfind("param/", 0) == 0;
  if (stored != params.entries().size()) {
    fail(ErrorCode::CheckpointMismatch, "checkpoint has " + std::to_string(stored) + " parameters, model has " +
                                            std::to_string(params.entries().size()));
  }
  for (const auto& e : params.entries()) {
    const NamedArray* a = ckpt.find("param/" + e.name);
    if (!a) fail(ErrorCode::CheckpointMismatch, "checkpoint lacks parameter " + e.name);
    if (a->shape != e.shape) {
      fail(ErrorCode::CheckpointMismatch, "parameter " + e.name + " has shape " + ad::shape_string(a->shape) +
                                              ", model expects " + ad::shape_string(e.shape));
    }
    auto dst = params.values(e.name);
    std::copy(a->values.begin(), a->values.end(), dst.begin());
  }
}

UNet model_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("model")) fail(ErrorCode::CheckpointMismatch, "checkpoint lacks a model config");
  UNet model(UNetConfig::from_json(ckpt.meta.at("model")));
  load_parameters(model, ckpt);
  return model;
}

optim::OptimState optimizer_state(const Checkpoint& ckpt) {
  optim::OptimState s;
  if (!ckpt.meta.contains("optimizer")) fail(ErrorCode::CheckpointMismatch, "checkpoint has no optimizer state");
  s.meta = ckpt.meta.at("optimizer");
  for (const auto& a : ckpt.arrays) {
    if (a.name.rfind("optim/", 0) == 0) s.arrays[a.name.substr(6)] = a.values;
  }
  return s;
}

}  // namespace gliomaseg::models
