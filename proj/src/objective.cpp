#include "radarfield/objective.hpp"

namespace radarfield::objective {

torch::Tensor apply_forward_model(const torch::Tensor& decoded, const torch::Tensor& mask,
                                  const torch::Tensor& proj) {
  TORCH_CHECK(decoded.dim() == 5 && decoded.size(2) == 3,
              "apply_forward_model: decoded must be T x B x 3 x K x L");
  const torch::Tensor vx = decoded.select(2, 0).unsqueeze(2);  // T x B x 1 x K x L
  const torch::Tensor vy = decoded.select(2, 1).unsqueeze(2);
  const torch::Tensor q = decoded.select(2, 2).unsqueeze(2);
  const torch::Tensor m = mask.unsqueeze(0);                 // 1 x B x N x K x L
  const torch::Tensor ax = proj.select(2, 0).unsqueeze(0);   // 1 x B x N x K x L
  const torch::Tensor ay = proj.select(2, 1).unsqueeze(0);
  const torch::Tensor radial = m * (ax * vx + ay * vy);      // T x B x N x K x L
  const torch::Tensor logdens = m * q;
  return torch::cat({radial, logdens}, 2);
}

torch::Tensor reconstruction_loss(const torch::Tensor& decoded, const torch::Tensor& obs,
                                  const torch::Tensor& mask, const torch::Tensor& proj) {
  const torch::Tensor pred = apply_forward_model(decoded, mask, proj);
  TORCH_CHECK(pred.sizes() == obs.sizes(), "reconstruction_loss: observation shape mismatch");
  const torch::Tensor sq = (pred - obs).pow(2);
  return sq.sum(2).mean();
}

torch::Tensor physics_loss(const torch::Tensor& decoded, const NormalizationSpec& norm,
                           const GridGeometry& geom) {
  TORCH_CHECK(decoded.dim() == 5 && decoded.size(2) == 3,
              "physics_loss: decoded must be T x B x 3 x K x L");
  TORCH_CHECK(decoded.size(0) >= 2, "physics_loss: need at least 2 frames");
  norm.validate();
  geom.validate();

  const double v_half = 0.5 * (norm.v_max - norm.v_min);
  const double v_mid = norm.v_min + v_half;
  const double q_half = 0.5 * (norm.q_max - norm.q_min);
  const double q_mid = norm.q_min + q_half;

  const torch::Tensor vx = decoded.select(2, 0) * v_half + v_mid;  // T x B x K x L
  const torch::Tensor vy = decoded.select(2, 1) * v_half + v_mid;
  const torch::Tensor q =
      torch::clamp(decoded.select(2, 2) * q_half + q_mid, norm.q_min, norm.q_max);
  const torch::Tensor rho = torch::exp(q);

  const torch::Tensor jx = vx * rho;
  const torch::Tensor jy = vy * rho;

  using torch::indexing::Slice;
  const auto inner = [](const torch::Tensor& x) {
    return x.index({Slice(), Slice(), Slice(1, -1), Slice(1, -1)});
  };
  const torch::Tensor div =
      (jx.index({Slice(), Slice(), Slice(2, torch::indexing::None), Slice(1, -1)}) -
       jx.index({Slice(), Slice(), Slice(torch::indexing::None, -2), Slice(1, -1)})) /
          (2.0 * geom.dx) +
      (jy.index({Slice(), Slice(), Slice(1, -1), Slice(2, torch::indexing::None)}) -
       jy.index({Slice(), Slice(), Slice(1, -1), Slice(torch::indexing::None, -2)})) /
          (2.0 * geom.dy);

  const torch::Tensor rho_in = inner(rho);
  const std::int64_t T = decoded.size(0);
  const torch::Tensor res = rho_in.narrow(0, 1, T - 1) - rho_in.narrow(0, 0, T - 1) +
                            geom.dt * div.narrow(0, 0, T - 1);
  return res.pow(2).mean();
}

LossBreakdown total_objective(const torch::Tensor& decoded, const torch::Tensor& obs,
                              const torch::Tensor& mask, const torch::Tensor& proj,
                              const NormalizationSpec& norm, const GridGeometry& geom,
                              bool physics_on, double lambda_physics) {
  LossBreakdown out;
  out.recons = reconstruction_loss(decoded, obs, mask, proj);
  if (physics_on) {
    out.physics = physics_loss(decoded, norm, geom);
    out.total = out.recons + lambda_physics * out.physics;
  } else {
    out.physics = torch::zeros_like(out.recons);
    out.total = out.recons;
  }
  return out;
}

}  // namespace radarfield::objective
