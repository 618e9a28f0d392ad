#include "radarfield/lgssm.hpp"

#include <cmath>
#include <stdexcept>

namespace radarfield::lgssm {

namespace {

torch::Tensor sym(const torch::Tensor& a) { return 0.5 * (a + a.transpose(-1, -2)); }

torch::Tensor eye_like(std::int64_t n, const torch::Tensor& ref) {
  return torch::eye(n, ref.options());
}

}  // namespace

CoeffNetImpl::CoeffNetImpl(std::int64_t D, std::int64_t hidden, std::int64_t C) {
  l1 = register_module("l1", torch::nn::Linear(D, hidden));
  l2 = register_module("l2", torch::nn::Linear(hidden, C));
}

torch::Tensor CoeffNetImpl::forward(const torch::Tensor& z) {
  return torch::softmax(l2(torch::relu(l1(z))), -1);
}

FilterResult kalman_filter(const torch::Tensor& w, const torch::Tensor& H,
                           const torch::Tensor& R, const torch::Tensor& P,
                           const torch::Tensor& mu1, const torch::Tensor& Sigma1,
                           const TransitionFn& transition, double jitter) {
  TORCH_CHECK(w.dim() == 3, "kalman_filter: w must be T x B x M");
  const std::int64_t T = w.size(0), B = w.size(1), M = w.size(2);
  const std::int64_t D = H.size(1);
  TORCH_CHECK(H.size(0) == M, "kalman_filter: H rows must match measurement dim");

  const torch::Tensor I_D = eye_like(D, w);
  const torch::Tensor jI_M = jitter * eye_like(M, w);
  const torch::Tensor Ht = H.transpose(0, 1);

  std::vector<torch::Tensor> means, covs, pred_means, pred_covs, trans;
  torch::Tensor loglik = torch::zeros({B}, w.options());
  const double log2pi = std::log(2.0 * 3.141592653589793238462643383279502884);

  torch::Tensor m = mu1.unsqueeze(0).expand({B, D});              // B x D
  torch::Tensor C = Sigma1.unsqueeze(0).expand({B, D, D});        // B x D x D

  for (std::int64_t t = 0; t < T; ++t) {
    if (t > 0) {
      const torch::Tensor F = transition(t, means.back());  // B x D x D
      m = torch::matmul(F, m.unsqueeze(-1)).squeeze(-1);
      C = sym(torch::matmul(torch::matmul(F, C), F.transpose(-1, -2)) + P);
      trans.push_back(F);
    } else {
      trans.push_back(I_D.unsqueeze(0).expand({B, D, D}));
    }
    pred_means.push_back(m);
    pred_covs.push_back(C);

    // Innovation covariance and gain; K = (S^-1 H C)^T uses C's symmetry.
    const torch::Tensor HC = torch::matmul(H, C);                      // B x M x D
    const torch::Tensor S = sym(torch::matmul(HC, Ht) + R) + jI_M;     // B x M x M
    const torch::Tensor K = torch::linalg_solve(S, HC).transpose(-1, -2);  // B x D x M

    const torch::Tensor e = w[t] - torch::matmul(m, Ht);  // B x M
    m = m + torch::matmul(K, e.unsqueeze(-1)).squeeze(-1);
    const torch::Tensor A = I_D - torch::matmul(K, H);
    C = sym(torch::matmul(torch::matmul(A, C), A.transpose(-1, -2)) +
            torch::matmul(torch::matmul(K, R), K.transpose(-1, -2)));

    {
      // Diagnostic only; kept out of the autograd graph.
      torch::NoGradGuard ng;
      const torch::Tensor Sinv_e = torch::linalg_solve(S, e.unsqueeze(-1)).squeeze(-1);
      const torch::Tensor logdet = std::get<1>(torch::linalg_slogdet(S));
      loglik = loglik - 0.5 * (M * log2pi + logdet + (e * Sinv_e).sum(-1));
    }

    means.push_back(m);
    covs.push_back(C);
  }

  FilterResult fr;
  fr.means = torch::stack(means);
  fr.covs = torch::stack(covs);
  fr.pred_means = torch::stack(pred_means);
  fr.pred_covs = torch::stack(pred_covs);
  fr.trans = torch::stack(trans);
  fr.loglik = loglik;
  return fr;
}

FilterResult kalman_filter(const torch::Tensor& w, const torch::Tensor& H,
                           const torch::Tensor& R, const torch::Tensor& P,
                           const torch::Tensor& mu1, const torch::Tensor& Sigma1,
                           const torch::Tensor& F_list, double jitter) {
  const std::int64_t T = w.size(0), B = w.size(1);
  const std::int64_t offset = F_list.size(0) == T ? 0 : 1;
  TORCH_CHECK(F_list.size(0) == T || F_list.size(0) == T - 1,
              "kalman_filter: need T or T-1 transition matrices");
  auto fn = [&](std::int64_t t, const torch::Tensor&) {
    return F_list[t - offset].unsqueeze(0).expand({B, F_list.size(1), F_list.size(2)});
  };
  return kalman_filter(w, H, R, P, mu1, Sigma1, fn, jitter);
}

SmootherResult rts_smooth(const FilterResult& fr, double jitter) {
  const std::int64_t T = fr.means.size(0);
  const std::int64_t D = fr.means.size(2);
  const torch::Tensor jI = jitter * eye_like(D, fr.means);

  std::vector<torch::Tensor> means(T), covs(T);
  means[T - 1] = fr.means[T - 1];
  covs[T - 1] = fr.covs[T - 1];

  for (std::int64_t t = T - 2; t >= 0; --t) {
    const torch::Tensor F = fr.trans[t + 1];          // predicts t -> t+1
    const torch::Tensor Cpred = fr.pred_covs[t + 1];  // B x D x D
    const torch::Tensor Cf = fr.covs[t];
    // G = Cf F^T Cpred^-1, computed as (Cpred^-1 F Cf)^T.
    const torch::Tensor G =
        torch::linalg_solve(sym(Cpred) + jI, torch::matmul(F, Cf)).transpose(-1, -2);
    means[t] = fr.means[t] +
               torch::matmul(G, (means[t + 1] - fr.pred_means[t + 1]).unsqueeze(-1)).squeeze(-1);
    covs[t] = sym(Cf + torch::matmul(torch::matmul(G, covs[t + 1] - Cpred),
                                     G.transpose(-1, -2)));
  }

  SmootherResult sr;
  sr.means = torch::stack(means);
  sr.covs = torch::stack(covs);
  return sr;
}

LgssmImpl::LgssmImpl(LgssmOptions o) : opt(o) {
  TORCH_CHECK(opt.M == opt.D, "LgssmImpl assumes H = I, so M must equal D");
  f_bases = register_parameter(
      "f_bases", torch::eye(opt.D).unsqueeze(0).repeat({opt.C, 1, 1}) +
                     opt.f_init_std * torch::randn({opt.C, opt.D, opt.D}));
  const double raw0 = std::log(std::expm1(opt.sigma_r_init));
  r_raw = register_parameter("r_raw", torch::full({opt.M}, raw0));
  coeff = register_module("coeff", CoeffNet(opt.D, opt.coeff_hidden, opt.C));
  if (opt.learn_prior) {
    mu1_param = register_parameter("mu1", torch::zeros({opt.D}));
    sigma1_raw = register_parameter("sigma1_raw",
                                    torch::full({opt.D}, std::log(std::expm1(opt.prior_var))));
  }
}

torch::Tensor LgssmImpl::mix_transition(const torch::Tensor& z) {
  const torch::Tensor alpha = coeff->forward(z);  // B x C
  return torch::einsum("bc,cij->bij", {alpha, f_bases});
}

torch::Tensor LgssmImpl::r_diag() const { return torch::softplus(r_raw); }

torch::Tensor LgssmImpl::prior_mean() const {
  if (opt.learn_prior) return mu1_param;
  return torch::zeros({opt.D}, f_bases.options());
}

torch::Tensor LgssmImpl::prior_cov() const {
  if (opt.learn_prior) return torch::diag(torch::softplus(sigma1_raw));
  return opt.prior_var * torch::eye(opt.D, f_bases.options());
}

SmootherResult LgssmImpl::smooth(const torch::Tensor& w, FilterResult* filter_out) {
  const torch::Tensor H = torch::eye(opt.D, w.options());
  const torch::Tensor R = torch::diag(r_diag()).to(w.options());
  const torch::Tensor P = opt.process_noise * torch::eye(opt.D, w.options());
  auto fn = [this](std::int64_t, const torch::Tensor& prev) { return mix_transition(prev); };
  FilterResult fr = kalman_filter(w, H, R, P, prior_mean().to(w.options()),
                                  prior_cov().to(w.options()), fn, opt.jitter);
  SmootherResult sr = rts_smooth(fr, opt.jitter);
  if (filter_out) *filter_out = std::move(fr);
  return sr;
}

torch::Tensor sample_marginal_posterior(const SmootherResult& sr, std::int64_t t,
                                        std::int64_t n_samples, Rng& rng) {
  TORCH_CHECK(n_samples >= 1, "sample_marginal_posterior: need n_samples >= 1");
  TORCH_CHECK(t >= 0 && t < sr.means.size(0), "sample_marginal_posterior: t out of range");
  const torch::Tensor mean = sr.means[t].to(torch::kFloat64);  // B x D
  const torch::Tensor cov = sym(sr.covs[t].to(torch::kFloat64));
  const std::int64_t B = mean.size(0), D = mean.size(1);

  auto [vals, vecs] = torch::linalg_eigh(cov);  // B x D, B x D x D
  const double max_val = vals.max().item<double>();
  const double tol = (sr.covs.scalar_type() == torch::kFloat64 ? 1e-8 : 1e-5) *
                     std::max(1.0, max_val);
  TORCH_CHECK(vals.min().item<double>() >= -tol,
              "sample_marginal_posterior: covariance is not PSD within tolerance");
  const torch::Tensor root = torch::sqrt(torch::clamp(vals, 0.0));  // B x D

  std::vector<double> eps_buf(static_cast<std::size_t>(n_samples) * B * D);
  for (double& x : eps_buf) x = rng.normal();
  const torch::Tensor eps =
      torch::from_blob(eps_buf.data(), {n_samples, B, D}, torch::kFloat64).clone();

  // x = m + V diag(root) eps
  const torch::Tensor scaled = eps * root.unsqueeze(0);  // n x B x D
  const torch::Tensor out =
      mean.unsqueeze(0) +
      torch::matmul(vecs.unsqueeze(0), scaled.unsqueeze(-1)).squeeze(-1);
  return out.to(sr.means.scalar_type());
}

}  // namespace radarfield::lgssm
