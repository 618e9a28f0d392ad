#include "radarfield/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radarfield/dataset.hpp"

namespace radarfield::checkpoint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'R', 'F', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kVersion = 1;
}  // namespace

void Archive::put(const std::string& name, const torch::Tensor& t) {
  for (const auto& [n, _] : arrays) {
    if (n == name) throw std::invalid_argument("Archive: duplicate array name " + name);
  }
  arrays.emplace_back(name, t.detach().to(torch::kFloat64).contiguous().cpu());
}

const torch::Tensor* Archive::find(const std::string& name) const {
  for (const auto& [n, t] : arrays) {
    if (n == name) return &t;
  }
  return nullptr;
}

torch::Tensor Archive::get(const std::string& name) const {
  const torch::Tensor* t = find(name);
  if (!t) throw std::runtime_error("Archive: missing array " + name);
  return *t;
}

void save(const Archive& ar, const std::string& path) {
  json header;
  header["version"] = kVersion;
  header["meta"] = ar.meta;
  json arrays = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ar.arrays) {
    json a;
    a["name"] = name;
    a["shape"] = std::vector<std::int64_t>(t.sizes().begin(), t.sizes().end());
    a["offset"] = offset;
    offset += static_cast<std::uint64_t>(t.numel());
    arrays.push_back(std::move(a));
  }
  header["arrays"] = std::move(arrays);
  const std::string hdr = header.dump();

  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = hdr.size();
  buf.append(reinterpret_cast<const char*>(&hlen), 8);
  buf.append(hdr);
  for (const auto& [name, t] : ar.arrays) {
    buf.append(reinterpret_cast<const char*>(t.data_ptr<double>()), t.numel() * sizeof(double));
  }
  const std::uint64_t hash = dataset::fnv1a(buf.data(), buf.size());
  buf.append(reinterpret_cast<const char*>(&hash), 8);

  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Archive load(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("cannot open: " + path);
  const std::size_t size = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::string buf(size, '\0');
  f.read(buf.data(), static_cast<std::streamsize>(size));
  if (!f) throw std::runtime_error("read failed: " + path);

  if (size < sizeof(kMagic) + 16 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint64_t stored_hash;
  std::memcpy(&stored_hash, buf.data() + size - 8, 8);
  if (dataset::fnv1a(buf.data(), size - 8) != stored_hash) {
    throw std::runtime_error("checkpoint hash mismatch (truncated or corrupted): " + path);
  }

  std::uint64_t hlen;
  std::memcpy(&hlen, buf.data() + 8, 8);
  if (16 + hlen + 8 > size) throw std::runtime_error("checkpoint header overruns file: " + path);
  const json header = json::parse(buf.substr(16, hlen));
  if (header.at("version") != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }

  Archive ar;
  ar.meta = header.at("meta").get<std::map<std::string, std::string>>();
  const char* data = buf.data() + 16 + hlen;
  const std::size_t data_count = (size - 8 - 16 - hlen) / sizeof(double);
  for (const json& a : header.at("arrays")) {
    const std::string name = a.at("name");
    const std::vector<std::int64_t> shape = a.at("shape").get<std::vector<std::int64_t>>();
    const std::uint64_t offset = a.at("offset");
    std::int64_t numel = 1;
    for (auto s : shape) numel *= s;
    if (offset + static_cast<std::uint64_t>(numel) > data_count) {
      throw std::runtime_error("checkpoint array overruns data region: " + name);
    }
    torch::Tensor t = torch::from_blob(const_cast<char*>(data) + offset * sizeof(double),
                                       shape, torch::kFloat64)
                          .clone();
    ar.arrays.emplace_back(name, std::move(t));
  }
  return ar;
}

void put_module(Archive& ar, const std::string& prefix, const torch::nn::Module& m) {
  for (const auto& p : m.named_parameters()) ar.put(prefix + "." + p.key(), p.value());
  for (const auto& b : m.named_buffers()) ar.put(prefix + "." + b.key(), b.value());
}

void load_module(const Archive& ar, const std::string& prefix, torch::nn::Module& m) {
  torch::NoGradGuard ng;
  for (auto& p : m.named_parameters()) {
    const torch::Tensor src = ar.get(prefix + "." + p.key());
    TORCH_CHECK(src.sizes() == p.value().sizes(), "checkpoint shape mismatch for ", p.key());
    p.value().copy_(src);
  }
  for (auto& b : m.named_buffers()) b.value().copy_(ar.get(prefix + "." + b.key()));
}

void put_adam(Archive& ar, const std::string& prefix, const torch::optim::Adam& opt,
              const std::vector<std::pair<std::string, torch::Tensor>>& named_params) {
  const auto& state = opt.state();
  for (const auto& [name, param] : named_params) {
    const auto it = state.find(param.unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    ar.put(prefix + "." + name + ".exp_avg", s.exp_avg());
    ar.put(prefix + "." + name + ".exp_avg_sq", s.exp_avg_sq());
    ar.put(prefix + "." + name + ".step",
           torch::tensor(static_cast<double>(s.step()), torch::kFloat64));
    if (s.max_exp_avg_sq().defined()) {
      ar.put(prefix + "." + name + ".max_exp_avg_sq", s.max_exp_avg_sq());
    }
  }
}

void load_adam(const Archive& ar, const std::string& prefix, torch::optim::Adam& opt,
               const std::vector<std::pair<std::string, torch::Tensor>>& named_params) {
  auto& state = opt.state();
  for (const auto& [name, param] : named_params) {
    const torch::Tensor* avg = ar.find(prefix + "." + name + ".exp_avg");
    if (!avg) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->exp_avg(avg->to(param.dtype()));
    s->exp_avg_sq(ar.get(prefix + "." + name + ".exp_avg_sq").to(param.dtype()));
    s->step(static_cast<std::int64_t>(
        ar.get(prefix + "." + name + ".step").item<double>()));
    if (const torch::Tensor* mx = ar.find(prefix + "." + name + ".max_exp_avg_sq")) {
      s->max_exp_avg_sq(mx->to(param.dtype()));
    }
    state[param.unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace radarfield::checkpoint
