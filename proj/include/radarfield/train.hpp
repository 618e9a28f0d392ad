#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "radarfield/baselines.hpp"
#include "radarfield/checkpoint.hpp"
#include "radarfield/dataset.hpp"
#include "radarfield/lgssm.hpp"
#include "radarfield/nets.hpp"

namespace radarfield::train {

struct TrainConfig {
  double lr = 0.001;
  int max_epochs = 100;
  int batch = 8;        // sequences per step
  int vae_batch = 64;   // frames per step for the per-frame baseline
  double val_frac = 0.1;
  int patience = 20;    // epochs without validation improvement
  std::uint64_t seed = 1;
  bool physics = true;
  double lambda_physics = 1.0;
  bool learn_prior = false;
};

// Encoder -> latent filter/smoother -> decoder, end to end.
class SeqModelImpl : public torch::nn::Module {
 public:
  SeqModelImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L,
               lgssm::LgssmOptions opt);

  // enc_in: T x B x C x K x L. Decodes the smoothed posterior means into
  // T x B x 3 x K x L normalized fields.
  torch::Tensor forward(const torch::Tensor& enc_in,
                        lgssm::SmootherResult* smoother_out = nullptr,
                        lgssm::FilterResult* filter_out = nullptr);

  nets::ConvEncoder enc{nullptr};
  nets::ConvDecoder dec{nullptr};
  lgssm::Lgssm dyn{nullptr};
  lgssm::LgssmOptions opt;
};
TORCH_MODULE(SeqModel);

// Append-only CSV with a fixed schema; floats printed with %.17g so files
// byte-compare across identical runs.
class MetricsCsv {
 public:
  explicit MetricsCsv(const std::string& path);
  void row(const std::string& run_id, const std::string& method, const std::string& d,
           int n_train, std::uint64_t seed, std::optional<int> epoch,
           std::optional<double> l_recons, std::optional<double> l_physics,
           std::optional<double> rmse_v, std::optional<double> rmse_q);

 private:
  std::ofstream f_;
};

struct TrainOutcome {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val = 0.0;
};

// Trains on the first n_train_use training sequences (10% held out for
// checkpoint selection), writes one metrics row per batch and the best
// checkpoint (parameters + Adam state + config meta) to checkpoint_path.
TrainOutcome train_model(const std::string& data_dir, const dataset::Manifest& man,
                         const std::string& d_tag, int n_train_use, const TrainConfig& cfg,
                         const std::string& checkpoint_path, MetricsCsv& csv,
                         const std::string& run_id);

TrainOutcome train_vae(const std::string& data_dir, const dataset::Manifest& man,
                       const std::string& d_tag, int n_train_use, const TrainConfig& cfg,
                       const std::string& checkpoint_path, MetricsCsv& csv,
                       const std::string& run_id);

struct EvalResult {
  double rmse_v = 0.0;
  double rmse_q = 0.0;  // NaN when the method does not reconstruct densities
  std::vector<double> rmse_v_t, rmse_q_t;  // per-frame curves
  std::vector<double> std_v_t, std_q_t;    // posterior-sample std curves (ours only)
};

// Test-split RMSE in normalized units, computed per sequence then averaged,
// plus per-frame curves and, for the sequence model, posterior-sampling
// uncertainty curves from n_samples decoded draws per frame.
EvalResult evaluate_model(const std::string& data_dir, const dataset::Manifest& man,
                          const std::string& d_tag, const std::string& checkpoint_path,
                          int n_samples = 10, std::uint64_t sample_seed = 7);

EvalResult evaluate_vae(const std::string& data_dir, const dataset::Manifest& man,
                        const std::string& d_tag, const std::string& checkpoint_path);

EvalResult evaluate_vvp(const std::string& data_dir, const dataset::Manifest& man,
                        const std::string& d_tag);

// Writes per-frame curves: run_id,method,d,t,rmse_v,rmse_q,std_v,std_q.
void write_curves(const std::string& path, const std::string& run_id,
                  const std::string& method, const std::string& d_tag, const EvalResult& r);

// Rebuild helpers shared by evaluation and tests.
SeqModel model_from_archive(const checkpoint::Archive& ar);
baselines::ConvVae vae_from_archive(const checkpoint::Archive& ar);

}  // namespace radarfield::train
