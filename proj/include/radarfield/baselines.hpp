#pragma once

#include <array>
#include <cstdint>
#include <tuple>
#include <vector>

#include <torch/torch.h>

#include "radarfield/dataset.hpp"
#include "radarfield/grid.hpp"
#include "radarfield/nets.hpp"

namespace radarfield::baselines {

struct VvpEstimate {
  std::array<double, 2> v{0.0, 0.0};
  bool degenerate = false;  // normal equations ill-conditioned; v is minimal-norm
};

// Least-squares uniform velocity explaining one radar's radial samples,
// via the 2x2 normal equations. Needs at least 2 in-mask cells. When the
// beam directions are (nearly) collinear the unresolvable direction is
// dropped and the flag is set.
VvpEstimate vvp_fit(const std::vector<double>& radial, const std::vector<double>& ax,
                    const std::vector<double>& ay, const std::vector<std::uint8_t>& mask);

// Per-component affine (plane) fit through the estimates at the radar
// positions, evaluated at all cell centers. Exact for 3 non-collinear radars;
// 1 estimate gives a constant field; collinear positions vary along the line
// only. Degenerate estimates are excluded unless all are degenerate.
VectorField vvp_interpolate(const std::vector<VvpEstimate>& estimates,
                            const std::vector<std::array<double, 2>>& positions,
                            const GridGeometry& geom);

// Full per-frame pipeline on container tensors: fit each radar on the
// observed radial channel, interpolate. Returns T x 2 x K x L, normalized
// units (the observations are normalized, so the fit lives on that scale).
torch::Tensor vvp_reconstruct(const dataset::LoadedSequence& s, const GridGeometry& geom);

// Per-frame VAE sharing the reconstruction model's encoder trunk and decoder
// shapes; the encoder head emits mean and log-variance of a diagonal
// Gaussian posterior over the latent.
class ConvVaeImpl : public torch::nn::Module {
 public:
  ConvVaeImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L, std::int64_t latent);

  // sample = true draws z through the reparameterization (training);
  // sample = false decodes the posterior mean (evaluation).
  std::tuple<torch::Tensor, torch::Tensor, torch::Tensor> forward(const torch::Tensor& x,
                                                                  bool sample);

  torch::nn::Conv2d c1{nullptr}, c2{nullptr}, c3{nullptr};
  torch::nn::Linear head{nullptr};
  nets::ConvDecoder dec{nullptr};

 private:
  std::int64_t latent_;
};
TORCH_MODULE(ConvVae);

struct VaeLoss {
  torch::Tensor recon;  // squared measurement error, summed per frame, batch-averaged
  torch::Tensor kl;     // KL(q(z|x) || N(0, I)), batch-averaged
  torch::Tensor total;
};

VaeLoss vae_loss(const torch::Tensor& decoded, const torch::Tensor& mu,
                 const torch::Tensor& logvar, const torch::Tensor& obs,
                 const torch::Tensor& mask, const torch::Tensor& proj);

}  // namespace radarfield::baselines
