#include "radarfield/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "radarfield/objective.hpp"

namespace radarfield::baselines {

namespace {

constexpr double kCondLimit = 1e8;

// Solve [[a, b], [b, c]] x = r for a symmetric PSD matrix via its closed-form
// eigendecomposition, dropping directions whose eigenvalue falls below
// lambda_max / kCondLimit (minimal-norm solution).
struct Sym2Solution {
  std::array<double, 2> x{0.0, 0.0};
  bool degenerate = false;
};

Sym2Solution solve_sym2(double a, double b, double c, double r0, double r1) {
  Sym2Solution out;
  const double half_tr = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  const double l1 = half_tr + disc;  // >= l2
  const double l2 = half_tr - disc;
  if (!(l1 > 0.0)) {
    out.degenerate = true;
    return out;
  }
  // Eigenvector for l1; the l2 vector is its 90-degree rotation.
  double u0, u1;
  if (std::fabs(b) > 0.0) {
    u0 = b;
    u1 = l1 - a;
  } else if (a >= c) {
    u0 = 1.0;
    u1 = 0.0;
  } else {
    u0 = 0.0;
    u1 = 1.0;
  }
  const double norm = std::sqrt(u0 * u0 + u1 * u1);
  u0 /= norm;
  u1 /= norm;

  const double p1 = u0 * r0 + u1 * r1;
  out.x = {p1 / l1 * u0, p1 / l1 * u1};
  if (l2 > l1 / kCondLimit) {
    const double p2 = -u1 * r0 + u0 * r1;
    out.x[0] += p2 / l2 * (-u1);
    out.x[1] += p2 / l2 * u0;
  } else {
    out.degenerate = true;
  }
  return out;
}

}  // namespace

VvpEstimate vvp_fit(const std::vector<double>& radial, const std::vector<double>& ax,
                    const std::vector<double>& ay, const std::vector<std::uint8_t>& mask) {
  const std::size_t n = mask.size();
  if (radial.size() != n || ax.size() != n || ay.size() != n) {
    throw std::invalid_argument("vvp_fit: size mismatch");
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0, bx = 0.0, by = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++cells;
    sxx += ax[i] * ax[i];
    sxy += ax[i] * ay[i];
    syy += ay[i] * ay[i];
    bx += ax[i] * radial[i];
    by += ay[i] * radial[i];
  }
  if (cells < 2) throw std::invalid_argument("vvp_fit: need at least 2 in-mask cells");
  const Sym2Solution s = solve_sym2(sxx, sxy, syy, bx, by);
  return VvpEstimate{s.x, s.degenerate};
}

VectorField vvp_interpolate(const std::vector<VvpEstimate>& estimates,
                            const std::vector<std::array<double, 2>>& positions,
                            const GridGeometry& geom) {
  if (estimates.empty() || estimates.size() != positions.size()) {
    throw std::invalid_argument("vvp_interpolate: need matched estimates and positions");
  }
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i].degenerate) use.push_back(i);
  }
  if (use.empty()) {
    for (std::size_t i = 0; i < estimates.size(); ++i) use.push_back(i);
  }

  // Affine fit per component around the centroid; centering makes the
  // constant part decouple exactly from the gradient part.
  double cx = 0.0, cy = 0.0;
  for (std::size_t i : use) {
    cx += positions[i][0];
    cy += positions[i][1];
  }
  cx /= static_cast<double>(use.size());
  cy /= static_cast<double>(use.size());

  double gxx = 0.0, gxy = 0.0, gyy = 0.0;
  for (std::size_t i : use) {
    const double px = positions[i][0] - cx;
    const double py = positions[i][1] - cy;
    gxx += px * px;
    gxy += px * py;
    gyy += py * py;
  }

  std::array<std::array<double, 3>, 2> coef{};  // per component: c0, c1, c2
  for (int comp = 0; comp < 2; ++comp) {
    double mean = 0.0, rx = 0.0, ry = 0.0;
    for (std::size_t i : use) mean += estimates[i].v[comp];
    mean /= static_cast<double>(use.size());
    for (std::size_t i : use) {
      const double d = estimates[i].v[comp];
      rx += (positions[i][0] - cx) * d;
      ry += (positions[i][1] - cy) * d;
    }
    const Sym2Solution g = solve_sym2(gxx, gxy, gyy, rx, ry);
    coef[comp] = {mean, g.x[0], g.x[1]};
  }

  std::vector<double> vx(geom.cells()), vy(geom.cells());
  for (int k = 0; k < geom.K; ++k) {
    for (int l = 0; l < geom.L; ++l) {
      const double px = geom.cx(k) - cx;
      const double py = geom.cy(l) - cy;
      vx[geom.idx(k, l)] = coef[0][0] + coef[0][1] * px + coef[0][2] * py;
      vy[geom.idx(k, l)] = coef[1][0] + coef[1][1] * px + coef[1][2] * py;
    }
  }
  return VectorField(geom, std::move(vx), std::move(vy));
}

torch::Tensor vvp_reconstruct(const dataset::LoadedSequence& s, const GridGeometry& geom) {
  const std::int64_t T = s.obs.size(0);
  const std::int64_t N = s.mask.size(0);
  const std::int64_t K = s.mask.size(1);
  const std::int64_t L = s.mask.size(2);
  TORCH_CHECK(K == geom.K && L == geom.L, "vvp_reconstruct: geometry mismatch");
  const std::size_t cells = geom.cells();

  std::vector<std::array<double, 2>> positions(N);
  const auto pos_a = s.radar_pos.accessor<float, 2>();
  for (std::int64_t n = 0; n < N; ++n) positions[n] = {pos_a[n][0], pos_a[n][1]};

  std::vector<std::vector<std::uint8_t>> masks(N, std::vector<std::uint8_t>(cells));
  std::vector<std::vector<double>> axs(N, std::vector<double>(cells));
  std::vector<std::vector<double>> ays(N, std::vector<double>(cells));
  const auto mask_a = s.mask.accessor<float, 3>();
  const auto proj_a = s.proj.accessor<float, 4>();
  for (std::int64_t n = 0; n < N; ++n) {
    for (std::int64_t k = 0; k < K; ++k) {
      for (std::int64_t l = 0; l < L; ++l) {
        const std::size_t i = geom.idx(static_cast<int>(k), static_cast<int>(l));
        masks[n][i] = mask_a[n][k][l] != 0.0f;
        axs[n][i] = proj_a[n][0][k][l];
        ays[n][i] = proj_a[n][1][k][l];
      }
    }
  }

  torch::Tensor out = torch::zeros({T, 2, K, L});
  const auto obs_a = s.obs.accessor<float, 4>();
  std::vector<double> radial(cells);
  for (std::int64_t t = 0; t < T; ++t) {
    std::vector<VvpEstimate> est;
    for (std::int64_t n = 0; n < N; ++n) {
      for (std::int64_t k = 0; k < K; ++k) {
        for (std::int64_t l = 0; l < L; ++l) {
          radial[geom.idx(static_cast<int>(k), static_cast<int>(l))] = obs_a[t][n][k][l];
        }
      }
      est.push_back(vvp_fit(radial, axs[n], ays[n], masks[n]));
    }
    const VectorField f = vvp_interpolate(est, positions, geom);
    auto out_a = out.accessor<float, 4>();
    for (std::int64_t k = 0; k < K; ++k) {
      for (std::int64_t l = 0; l < L; ++l) {
        const std::size_t i = geom.idx(static_cast<int>(k), static_cast<int>(l));
        out_a[t][0][k][l] = static_cast<float>(f.x()[i]);
        out_a[t][1][k][l] = static_cast<float>(f.y()[i]);
      }
    }
  }
  return out;
}

ConvVaeImpl::ConvVaeImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L,
                         std::int64_t latent)
    : latent_(latent) {
  c1 = register_module("c1", torch::nn::Conv2d(
                                 torch::nn::Conv2dOptions(in_channels, 32, 3).stride(1).padding(1)));
  c2 = register_module("c2", torch::nn::Conv2d(torch::nn::Conv2dOptions(32, 64, 3).stride(1).padding(1)));
  c3 = register_module("c3", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 128, 3).stride(1).padding(1)));
  head = register_module("head", torch::nn::Linear(128 * (K / 8) * (L / 8), 2 * latent));
  dec = register_module("dec", nets::ConvDecoder(latent, K, L));
}

std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> ConvVaeImpl::forward(
    const torch::Tensor& x, bool sample) {
  torch::Tensor h = torch::max_pool2d(torch::relu(c1(x)), 2);
  h = torch::max_pool2d(torch::relu(c2(h)), 2);
  h = torch::max_pool2d(torch::relu(c3(h)), 2);
  const torch::Tensor stats = head(h.flatten(1));
  const torch::Tensor mu = stats.narrow(1, 0, latent_);
  const torch::Tensor logvar = stats.narrow(1, latent_, latent_);
  torch::Tensor z = mu;
  if (sample) z = mu + torch::exp(0.5 * logvar) * torch::randn_like(mu);
  return {dec->forward(z), mu, logvar};
}

VaeLoss vae_loss(const torch::Tensor& decoded, const torch::Tensor& mu,
                 const torch::Tensor& logvar, const torch::Tensor& obs,
                 const torch::Tensor& mask, const torch::Tensor& proj) {
  const torch::Tensor pred =
      objective::apply_forward_model(decoded.unsqueeze(0), mask, proj).squeeze(0);
  TORCH_CHECK(pred.sizes() == obs.sizes(), "vae_loss: observation shape mismatch");
  VaeLoss out;
  out.recon = (pred - obs).pow(2).flatten(1).sum(1).mean();
  out.kl = (-0.5 * (1.0 + logvar - mu.pow(2) - torch::exp(logvar))).sum(1).mean();
  out.total = out.recon + out.kl;
  return out;
}

}  // namespace radarfield::baselines
