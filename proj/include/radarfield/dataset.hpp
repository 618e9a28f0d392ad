#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "radarfield/grid.hpp"
#include "radarfield/radar.hpp"
#include "radarfield/synth.hpp"

namespace radarfield::dataset {

// The on-disk container: manifest.json plus one little-endian float32 blob per
// sequence. Blob section order, all row-major:
//   v        T x 2 x K x L   physical units (vx plane, then vy plane per frame)
//   rho      T x K x L       physical units
//   radar    N x 2           positions (shared by all range settings)
//   then per range setting, in d_tags order:
//     mask   N x K x L       0/1
//     proj   N x 2 x K x L   ax plane, then ay plane per radar
//     obs    T x 2N x K x L  channels r_1..r_N, q_1..q_N; normalized + noised
struct DatasetConfig {
  synth::SimulationConfig sim;
  int n_train = 1000;
  int n_test = 50;
  int n_radars = 3;
  double noise_sigma = 0.001;
  std::vector<std::string> d_tags = {"1", "2", "inf"};
  bool fixed_radars = false;  // one placement shared by every sequence
  double density_floor = 1e-8;
  std::uint64_t master_seed = 0;

  void validate() const;
};

// "1", "2", ... parse to their value; "inf" to +infinity.
double parse_range(const std::string& tag);

struct SequenceRecord {
  int id = 0;
  std::string split;  // "train" | "test"
  std::uint64_t sim_seed = 0, radar_seed = 0, noise_seed = 0;
  std::string file;
  std::uint64_t bytes = 0;
  std::string hash;  // fnv1a-64 of the blob, 16 hex digits
};

struct Manifest {
  int format_version = 1;
  DatasetConfig cfg;
  NormalizationSpec norm;
  std::vector<SequenceRecord> sequences;
  std::string content_hash;

  GridGeometry geometry() const { return cfg.sim.geometry(); }
  std::vector<const SequenceRecord*> split(const std::string& name) const;
};

std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t h = 1469598103934665603ULL);
std::string hash_hex(std::uint64_t h);

// Two passes: the first generates the training split to fix the normalization
// bounds, the second regenerates every sequence (same seeds) and writes blobs.
Manifest generate_dataset(const DatasetConfig& cfg, const std::string& out_dir);

Manifest load_manifest(const std::string& dir);  // verifies content hash

// One sequence at one range setting, as float32 tensors.
struct LoadedSequence {
  torch::Tensor truth_v;    // T x 2 x K x L, normalized
  torch::Tensor truth_q;    // T x 1 x K x L, normalized
  torch::Tensor radar_pos;  // N x 2
  torch::Tensor mask;       // N x K x L
  torch::Tensor proj;       // N x 2 x K x L
  torch::Tensor obs;        // T x 2N x K x L
};

// Verifies the blob hash against the manifest record.
LoadedSequence load_sequence(const std::string& dir, const Manifest& man,
                             const SequenceRecord& rec, const std::string& d_tag);

std::vector<LoadedSequence> load_split(const std::string& dir, const Manifest& man,
                                       const std::string& split, const std::string& d_tag);

// T x 4N x K x L: per radar [r, q, ax, ay], observation channels already
// masked at generation time, projection channels masked here.
torch::Tensor encoder_input(const LoadedSequence& s);

}  // namespace radarfield::dataset
