#pragma once

// Test-only reference implementations, written independently of the library
// code they check: a dense joint-Gaussian construction of the state-space
// posterior, and small numeric helpers.

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace oracles {

struct DensePosterior {
  torch::Tensor means;   // T x D
  torch::Tensor covs;    // T x D x D
  double loglik = 0.0;   // log p(w)
};

// Builds the full T*D joint Gaussian over latent states by propagating the
// prior through the transition list, conditions on all observations at once,
// and slices per-step marginals. Everything is double precision and O(T^3 D^3),
// fine for the tiny systems it is used on.
//
// mu1: D, Sigma1: D x D, F: list of T-1 (D x D), P: D x D process noise,
// H: M x D, R: M x M, w: T x M.
inline DensePosterior dense_lgssm_posterior(const torch::Tensor& mu1,
                                            const torch::Tensor& Sigma1,
                                            const std::vector<torch::Tensor>& F,
                                            const torch::Tensor& P, const torch::Tensor& H,
                                            const torch::Tensor& R, const torch::Tensor& w) {
  const auto T = w.size(0);
  const auto D = mu1.size(0);
  const auto M = H.size(0);
  TORCH_CHECK(static_cast<std::int64_t>(F.size()) == T - 1, "need T-1 transitions");
  const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);

  // Joint prior mean and covariance, filled block-recursively:
  // Cov(x_t, x_s) = F_t Cov(x_{t-1}, x_s) for t > s.
  auto mean = torch::zeros({T * D}, f64);
  auto cov = torch::zeros({T * D, T * D}, f64);
  std::vector<torch::Tensor> m(static_cast<std::size_t>(T));
  std::vector<std::vector<torch::Tensor>> c(static_cast<std::size_t>(T),
                                            std::vector<torch::Tensor>(static_cast<std::size_t>(T)));
  m[0] = mu1.clone();
  c[0][0] = Sigma1.clone();
  for (std::int64_t t = 1; t < T; ++t) {
    const auto& Ft = F[static_cast<std::size_t>(t - 1)];
    m[static_cast<std::size_t>(t)] = torch::matmul(Ft, m[static_cast<std::size_t>(t - 1)]);
    for (std::int64_t s = 0; s < t; ++s) {
      c[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
          torch::matmul(Ft, c[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s)]);
      c[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] =
          c[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)].transpose(0, 1);
    }
    c[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)] =
        torch::matmul(torch::matmul(Ft, c[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(t - 1)]),
                      Ft.transpose(0, 1)) +
        P;
  }
  for (std::int64_t t = 0; t < T; ++t) {
    mean.slice(0, t * D, (t + 1) * D).copy_(m[static_cast<std::size_t>(t)]);
    for (std::int64_t s = 0; s < T; ++s)
      cov.slice(0, t * D, (t + 1) * D)
          .slice(1, s * D, (s + 1) * D)
          .copy_(c[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]);
  }

  // Block-diagonal observation operator and noise.
  auto Hb = torch::zeros({T * M, T * D}, f64);
  auto Rb = torch::zeros({T * M, T * M}, f64);
  for (std::int64_t t = 0; t < T; ++t) {
    Hb.slice(0, t * M, (t + 1) * M).slice(1, t * D, (t + 1) * D).copy_(H);
    Rb.slice(0, t * M, (t + 1) * M).slice(1, t * M, (t + 1) * M).copy_(R);
  }

  const auto wflat = w.reshape({T * M});
  const auto S = torch::matmul(torch::matmul(Hb, cov), Hb.transpose(0, 1)) + Rb;
  const auto resid = wflat - torch::matmul(Hb, mean);
  const auto CHt = torch::matmul(cov, Hb.transpose(0, 1));
  const auto Sinv_resid = torch::linalg_solve(S, resid);
  const auto post_mean = mean + torch::matmul(CHt, Sinv_resid);
  const auto post_cov =
      cov - torch::matmul(CHt, torch::linalg_solve(S, CHt.transpose(0, 1)));

  DensePosterior out;
  out.means = torch::zeros({T, D}, f64);
  out.covs = torch::zeros({T, D, D}, f64);
  for (std::int64_t t = 0; t < T; ++t) {
    out.means[t].copy_(post_mean.slice(0, t * D, (t + 1) * D));
    out.covs[t].copy_(
        post_cov.slice(0, t * D, (t + 1) * D).slice(1, t * D, (t + 1) * D));
  }
  const double quad = torch::dot(resid, Sinv_resid).item<double>();
  const double logdet = std::get<1>(torch::linalg_slogdet(S)).item<double>();
  const double n = static_cast<double>(T * M);
  out.loglik = -0.5 * (quad + logdet + n * std::log(2.0 * 3.14159265358979323846));
  return out;
}

// Random PSD matrix A A^T / n + eps I.
inline torch::Tensor random_psd(std::int64_t n, double eps = 0.05) {
  auto A = torch::randn({n, n}, torch::kFloat64);
  return torch::matmul(A, A.transpose(0, 1)) / static_cast<double>(n) +
         eps * torch::eye(n, torch::kFloat64);
}

inline double max_abs(const torch::Tensor& t) { return t.abs().max().item<double>(); }

}  // namespace oracles
