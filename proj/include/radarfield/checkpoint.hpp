#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace radarfield::checkpoint {

// Named float64 arrays plus string metadata. Arrays are stored as float64
// regardless of the training dtype (float32 embeds losslessly), so a
// round-trip restores parameters bit-exactly.
struct Archive {
  std::vector<std::pair<std::string, torch::Tensor>> arrays;
  std::map<std::string, std::string> meta;

  void put(const std::string& name, const torch::Tensor& t);
  const torch::Tensor* find(const std::string& name) const;
  torch::Tensor get(const std::string& name) const;  // throws if missing
};

// Layout: magic "RFCKPT01", u64 header length, JSON header (version, meta,
// array names/shapes/offsets), raw float64 data, trailing u64 content hash.
// Writes to a temp file and renames, so a reader never sees partial state.
void save(const Archive& ar, const std::string& path);
Archive load(const std::string& path);  // verifies magic, version, and hash

// Parameters (and buffers) of a module, prefixed "prefix.".
void put_module(Archive& ar, const std::string& prefix, const torch::nn::Module& m);
void load_module(const Archive& ar, const std::string& prefix, torch::nn::Module& m);

// Adam moments and step counters for the given parameters, prefixed
// "prefix.<param name>.". Parameters without state yet are skipped.
void put_adam(Archive& ar, const std::string& prefix, const torch::optim::Adam& opt,
              const std::vector<std::pair<std::string, torch::Tensor>>& named_params);
void load_adam(const Archive& ar, const std::string& prefix, torch::optim::Adam& opt,
               const std::vector<std::pair<std::string, torch::Tensor>>& named_params);

}  // namespace radarfield::checkpoint
