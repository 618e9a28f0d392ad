#pragma once

#include <cstdint>
#include <functional>

#include <torch/torch.h>

#include "radarfield/rng.hpp"

namespace radarfield::lgssm {

// Maps a latent state to softmax mixing coefficients over the transition bases.
class CoeffNetImpl : public torch::nn::Module {
 public:
  CoeffNetImpl(std::int64_t D, std::int64_t hidden, std::int64_t C);
  torch::Tensor forward(const torch::Tensor& z);  // B x D -> B x C, rows sum to 1

  torch::nn::Linear l1{nullptr}, l2{nullptr};
};
TORCH_MODULE(CoeffNet);

// Supplies F_t (B x D x D) used to predict from step t-1 to t, given the
// filtered mean at t-1. t is 1-based over 1..T-1; never called for t=0.
using TransitionFn =
    std::function<torch::Tensor(std::int64_t t, const torch::Tensor& prev_mean)>;

struct FilterResult {
  torch::Tensor means;       // T x B x D
  torch::Tensor covs;        // T x B x D x D
  torch::Tensor pred_means;  // T x B x D; row 0 is the prior mean
  torch::Tensor pred_covs;   // T x B x D x D; row 0 is the prior covariance
  torch::Tensor trans;       // T x B x D x D; row t predicts t-1 -> t, row 0 is identity
  torch::Tensor loglik;      // B, accumulated log marginal likelihood of w
};

struct SmootherResult {
  torch::Tensor means;  // T x B x D
  torch::Tensor covs;   // T x B x D x D
};

// Standard predict/update recursion with Joseph-form covariance updates and
// symmetrization after every step. Step 0 updates the prior directly with w_0.
// Dtype and batch shape follow w (T x B x M); H, R, P, Sigma1 are unbatched.
FilterResult kalman_filter(const torch::Tensor& w, const torch::Tensor& H,
                           const torch::Tensor& R, const torch::Tensor& P,
                           const torch::Tensor& mu1, const torch::Tensor& Sigma1,
                           const TransitionFn& transition, double jitter = 1e-9);

// Convenience overload for a fixed per-step transition list (T x D x D or
// (T-1) x D x D; row t is applied predicting into step t, row 0 ignored when
// T rows are given).
FilterResult kalman_filter(const torch::Tensor& w, const torch::Tensor& H,
                           const torch::Tensor& R, const torch::Tensor& P,
                           const torch::Tensor& mu1, const torch::Tensor& Sigma1,
                           const torch::Tensor& F_list, double jitter = 1e-9);

// Backward recursion reusing the transition matrices recorded by the filter.
// The last smoothed belief equals the last filtered belief exactly.
SmootherResult rts_smooth(const FilterResult& fr, double jitter = 1e-9);

struct LgssmOptions {
  std::int64_t D = 128;
  std::int64_t M = 128;
  std::int64_t C = 8;
  std::int64_t coeff_hidden = 64;
  double process_noise = 0.1;  // P = process_noise * I
  double prior_var = 10.0;     // Sigma1 = prior_var * I
  double sigma_r_init = 0.1;   // initial diagonal of R
  double f_init_std = 0.05;    // F^(k) = I + N(0, f_init_std^2)
  bool learn_prior = false;    // learnable mu1 and diagonal Sigma1
  double jitter = 1e-9;
};

// The latent dynamics model: fixed H = I and P, learned transition bases,
// coefficient net, and R diagonal (softplus-reparameterized).
class LgssmImpl : public torch::nn::Module {
 public:
  explicit LgssmImpl(LgssmOptions opt);

  torch::Tensor mix_transition(const torch::Tensor& z);  // B x D -> B x D x D
  torch::Tensor r_diag() const;                          // softplus(r_raw)
  torch::Tensor prior_mean() const;                      // D
  torch::Tensor prior_cov() const;                       // D x D

  // Filter + smooth over w (T x B x M), conditioning each F_t on the filtered
  // mean at t-1.
  SmootherResult smooth(const torch::Tensor& w, FilterResult* filter_out = nullptr);

  LgssmOptions opt;
  torch::Tensor f_bases;  // C x D x D
  torch::Tensor r_raw;    // M
  CoeffNet coeff{nullptr};
  torch::Tensor mu1_param, sigma1_raw;  // registered only when learn_prior
};
TORCH_MODULE(Lgssm);

// n_samples i.i.d. draws from the marginal smoothed posterior at step t,
// returned as n x B x D in the result's dtype. Sampling goes through an
// eigendecomposition in double precision; draws come from `rng`, so results
// are independent of torch's global generator.
torch::Tensor sample_marginal_posterior(const SmootherResult& sr, std::int64_t t,
                                        std::int64_t n_samples, Rng& rng);

}  // namespace radarfield::lgssm
