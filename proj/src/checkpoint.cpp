#include "neuflow/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace neuflow {

namespace {
constexpr char kMagic[8] = {'N', 'F', 'V', '2', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void ckpt_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("checkpoint: " + what + ": " + path);
}
}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     ParamMap<float>& params, const AdamW<float>* opt, int64_t step) {
  nlohmann::json hdr;
  hdr["config"] = cfg;
  hdr["step"] = step;
  nlohmann::json arrays = nlohmann::json::array();
  auto add_entry = [&](const std::string& name, const std::string& role, const Shape& s) {
    arrays.push_back({{"name", name}, {"role", role}, {"shape", s}});
  };
  for (auto& [name, t] : params.items) add_entry(name, "param", t.shape());
  if (opt) {
    hdr["adam_step"] = opt->step_count;
    for (size_t i = 0; i < params.items.size(); ++i) {
      add_entry(params.items[i].first, "adam_m", params.items[i].second.shape());
      add_entry(params.items[i].first, "adam_v", params.items[i].second.shape());
    }
  }
  hdr["arrays"] = arrays;
  const std::string j = hdr.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) ckpt_fail(path, "cannot open for writing");
  f.write(kMagic, 8);
  const uint32_t ver = kVersion;
  f.write(reinterpret_cast<const char*>(&ver), 4);
  const uint64_t jlen = j.size();
  f.write(reinterpret_cast<const char*>(&jlen), 8);
  f.write(j.data(), static_cast<std::streamsize>(j.size()));
  for (auto& [name, t] : params.items)
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * 4));
  if (opt)
    for (size_t i = 0; i < params.items.size(); ++i) {
      f.write(reinterpret_cast<const char*>(opt->m[i].data()),
              static_cast<std::streamsize>(opt->m[i].size() * 4));
      f.write(reinterpret_cast<const char*>(opt->v[i].data()),
              static_cast<std::streamsize>(opt->v[i].size() * 4));
    }
  if (!f) ckpt_fail(path, "write failed");
}

CheckpointInfo load_checkpoint(const std::string& path, NeuFlow<float>& model,
                               AdamW<float>* opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) ckpt_fail(path, "cannot open");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) ckpt_fail(path, "bad magic");
  uint32_t ver = 0;
  f.read(reinterpret_cast<char*>(&ver), 4);
  if (ver != kVersion) ckpt_fail(path, "unsupported version " + std::to_string(ver));
  uint64_t jlen = 0;
  f.read(reinterpret_cast<char*>(&jlen), 8);
  if (!f || jlen > (1ull << 30)) ckpt_fail(path, "bad header length");
  std::string j(jlen, '\0');
  f.read(j.data(), static_cast<std::streamsize>(jlen));
  if (!f) ckpt_fail(path, "truncated header");

  nlohmann::json hdr = nlohmann::json::parse(j, nullptr, false);
  if (hdr.is_discarded()) ckpt_fail(path, "corrupt header json");

  CheckpointInfo info;
  info.config = hdr.at("config").get<ModelConfig>();
  info.step = hdr.value("step", 0);
  model.init(info.config, 0);
  auto params = model.params();
  if (opt) {
    opt->init(params);
    opt->step_count = hdr.value("adam_step", 0);
  }

  for (const auto& entry : hdr.at("arrays")) {
    const std::string name = entry.at("name");
    const std::string role = entry.at("role");
    const Shape shape = entry.at("shape").get<Shape>();
    const int64_t n = numel(shape);

    float* dst = nullptr;
    if (role == "param") {
      Tensor<float>* t = params.find(name);
      if (!t) ckpt_fail(path, "unknown parameter '" + name + "'");
      if (t->shape() != shape)
        ckpt_fail(path, "shape mismatch for '" + name + "': file " + shape_str(shape) +
                            " vs model " + shape_str(t->shape()));
      dst = t->data();
    } else if (role == "adam_m" || role == "adam_v") {
      if (opt) {
        size_t idx = params.items.size();
        for (size_t i = 0; i < params.items.size(); ++i)
          if (params.items[i].first == name) {
            idx = i;
            break;
          }
        if (idx == params.items.size()) ckpt_fail(path, "unknown optimizer array '" + name + "'");
        dst = role == "adam_m" ? opt->m[idx].data() : opt->v[idx].data();
      }
    } else {
      ckpt_fail(path, "unknown array role '" + role + "'");
    }

    if (dst) {
      f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * 4));
    } else {
      f.seekg(static_cast<std::streamoff>(n * 4), std::ios::cur);
    }
    if (!f) ckpt_fail(path, "truncated payload at '" + name + "'");
  }
  return info;
}

}  // namespace neuflow
