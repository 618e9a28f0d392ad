#pragma once

#include <torch/torch.h>

#include "radarfield/grid.hpp"

namespace radarfield::objective {

struct LossBreakdown {
  torch::Tensor recons;
  torch::Tensor physics;
  torch::Tensor total;
};

// Measurement operator on decoded fields. decoded: T x B x 3 x K x L
// (channels vx, vy, q, normalized units); mask: B x N x K x L;
// proj: B x N x 2 x K x L. Returns T x B x 2N x K x L with channel order
// r_1..r_N, q_1..q_N; entries outside masks are exact zeros.
torch::Tensor apply_forward_model(const torch::Tensor& decoded, const torch::Tensor& mask,
                                  const torch::Tensor& proj);

// Squared error between predicted and observed measurement channels, summed
// over the 2N channels and averaged over frames, batch, and cells. Cells
// outside every mask contribute nothing (both sides are zero there).
torch::Tensor reconstruction_loss(const torch::Tensor& decoded, const torch::Tensor& obs,
                                  const torch::Tensor& mask, const torch::Tensor& proj);

// Interior forward-Euler continuity residual of consecutive decoded frames,
// in physical units: rho_{t+1} - rho_t + dt * div(v_t rho_t) with centered
// differences, for t = 0..T-2. rho = exp(q) after denormalizing and clamping
// q to the normalization bounds (the decoder can leave [-1, 1]). Returns the
// mean of squared residuals over frames, batch, and interior cells.
torch::Tensor physics_loss(const torch::Tensor& decoded, const NormalizationSpec& norm,
                           const GridGeometry& geom);

// total = recons + lambda_physics * physics; with physics_on = false the
// physics term is skipped and reported as zero.
LossBreakdown total_objective(const torch::Tensor& decoded, const torch::Tensor& obs,
                              const torch::Tensor& mask, const torch::Tensor& proj,
                              const NormalizationSpec& norm, const GridGeometry& geom,
                              bool physics_on = true, double lambda_physics = 1.0);

}  // namespace radarfield::objective
