#include <cmath>

#include "radarfield/baselines.hpp"
#include "radarfield/objective.hpp"
#include "radarfield/radar.hpp"

// doctest comes last: the tensor library's logging shims define a
// CHECK macro that would otherwise shadow the assertion macro.
#undef CHECK
#include "doctest.h"

using namespace radarfield;
using namespace radarfield::baselines;

namespace {

GridGeometry unit_grid(int n) {
  GridGeometry g;
  g.K = g.L = n;
  g.dx = g.dy = 1.0;
  g.x0 = g.y0 = 0.0;
  g.dt = 1.0;
  return g;
}

}  // namespace

TEST_CASE("radial fit recovers a uniform velocity from well-spread beams") {
  const auto g = unit_grid(9);
  const auto rs = radar::build_projections({{{4.0, 4.0}, 100.0}}, g);
  const double vx = 0.37, vy = -0.54;
  std::vector<double> radial(g.cells());
  for (std::size_t i = 0; i < g.cells(); ++i)
    radial[i] = rs.mask[0][i] ? rs.ax[0][i] * vx + rs.ay[0][i] * vy : 0.0;
  const auto est = vvp_fit(radial, rs.ax[0], rs.ay[0], rs.mask[0]);
  CHECK(!est.degenerate);
  CHECK(std::abs(est.v[0] - vx) < 1e-10);
  CHECK(std::abs(est.v[1] - vy) < 1e-10);
}

TEST_CASE("collinear beams yield the minimal-norm projection") {
  // All beams along +x: only the x component is observable.
  std::vector<double> ax = {1.0, 1.0, 1.0}, ay = {0.0, 0.0, 0.0};
  std::vector<double> radial = {0.8, 0.8, 0.8};
  std::vector<std::uint8_t> mask = {1, 1, 1};
  const auto est = vvp_fit(radial, ax, ay, mask);
  CHECK(est.degenerate);
  CHECK(est.v[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(est.v[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit requires at least two cells") {
  std::vector<double> one = {0.5};
  std::vector<std::uint8_t> mask = {1};
  CHECK_THROWS(vvp_fit(one, one, one, mask));
}

TEST_CASE("interpolation: constants are exact, affine fields are recovered") {
  const auto g = unit_grid(8);

  // Identical estimates at power-of-two values survive the mean exactly.
  std::vector<VvpEstimate> same(3);
  for (auto& e : same) e.v = {0.5, -0.25};
  const auto cf = vvp_interpolate(same, {{1.0, 1.0}, {5.0, 2.0}, {3.0, 6.0}}, g);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l) {
      CHECK(cf.xat(k, l) == 0.5);
      CHECK(cf.yat(k, l) == -0.25);
    }

  // Three non-collinear samples of an affine field pin it down everywhere.
  auto affine_x = [](double x, double y) { return 0.2 + 0.04 * x - 0.07 * y; };
  auto affine_y = [](double x, double y) { return -0.1 + 0.02 * x + 0.05 * y; };
  const std::vector<std::array<double, 2>> pos = {{1.0, 1.5}, {6.0, 2.0}, {3.0, 5.5}};
  std::vector<VvpEstimate> est(3);
  for (int i = 0; i < 3; ++i)
    est[static_cast<std::size_t>(i)].v = {affine_x(pos[static_cast<std::size_t>(i)][0],
                                                   pos[static_cast<std::size_t>(i)][1]),
                                          affine_y(pos[static_cast<std::size_t>(i)][0],
                                                   pos[static_cast<std::size_t>(i)][1])};
  const auto f = vvp_interpolate(est, pos, g);
  for (int k = 0; k < g.K; k += 3)
    for (int l = 0; l < g.L; l += 3) {
      CHECK(f.xat(k, l) == doctest::Approx(affine_x(g.cx(k), g.cy(l))).epsilon(1e-9));
      CHECK(f.yat(k, l) == doctest::Approx(affine_y(g.cx(k), g.cy(l))).epsilon(1e-9));
    }

  // A single estimate extends as a constant field.
  const auto single = vvp_interpolate({est[0]}, {pos[0]}, g);
  CHECK(single.xat(7, 7) == doctest::Approx(est[0].v[0]).epsilon(1e-12));

  // Degenerate estimates are dropped when a clean subset remains.
  auto est2 = est;
  est2.push_back(VvpEstimate{{99.0, 99.0}, true});
  auto pos2 = pos;
  pos2.push_back({7.0, 7.0});
  const auto f2 = vvp_interpolate(est2, pos2, g);
  CHECK(f2.xat(4, 4) == doctest::Approx(f.xat(4, 4)).epsilon(1e-12));

  // Collinear positions: the fitted field only varies along the line.
  const std::vector<std::array<double, 2>> line = {{1.0, 1.0}, {3.0, 3.0}, {5.0, 5.0}};
  std::vector<VvpEstimate> le(3);
  for (int i = 0; i < 3; ++i) le[static_cast<std::size_t>(i)].v = {0.1 * (i + 1), 0.0};
  const auto lf = vvp_interpolate(le, line, g);
  // Perpendicular direction (1,-1)/sqrt(2): moving along it changes nothing.
  CHECK(lf.xat(2, 4) == doctest::Approx(lf.xat(4, 2)).epsilon(1e-9));
}

TEST_CASE("tensor pipeline reproduces a uniform field end to end") {
  synth::SimulationConfig sim;
  sim.K = sim.L = 16;
  const auto g = sim.geometry();
  Rng rng(12);
  const auto radars = radar::sample_radars(3, 1.4, g, rng);
  const auto rs = radar::build_projections(radars, g);

  dataset::LoadedSequence s;
  const int T = 3, N = 3;
  s.mask = torch::zeros({N, g.K, g.L});
  s.proj = torch::zeros({N, 2, g.K, g.L});
  s.radar_pos = torch::zeros({N, 2});
  for (int n = 0; n < N; ++n) {
    s.radar_pos[n][0] = radars[static_cast<std::size_t>(n)].position[0];
    s.radar_pos[n][1] = radars[static_cast<std::size_t>(n)].position[1];
    for (int k = 0; k < g.K; ++k)
      for (int l = 0; l < g.L; ++l) {
        s.mask[n][k][l] = static_cast<float>(rs.mask[static_cast<std::size_t>(n)][g.idx(k, l)]);
        s.proj[n][0][k][l] = static_cast<float>(rs.ax[static_cast<std::size_t>(n)][g.idx(k, l)]);
        s.proj[n][1][k][l] = static_cast<float>(rs.ay[static_cast<std::size_t>(n)][g.idx(k, l)]);
      }
  }
  const double vx = 0.31, vy = -0.22;
  s.obs = torch::zeros({T, 2 * N, g.K, g.L});
  for (int n = 0; n < N; ++n)
    s.obs.index_put_({torch::indexing::Slice(), n},
                     (s.proj[n][0] * vx + s.proj[n][1] * vy) * s.mask[n]);
  s.truth_v = torch::zeros({T, 2, g.K, g.L});

  const auto recon = vvp_reconstruct(s, g);
  CHECK(recon.sizes() == torch::IntArrayRef({T, 2, g.K, g.L}));
  CHECK((recon.index({torch::indexing::Slice(), 0}) - vx).abs().max().item<float>() < 1e-5f);
  CHECK((recon.index({torch::indexing::Slice(), 1}) - vy).abs().max().item<float>() < 1e-5f);
}

TEST_CASE("vae forward shapes and deterministic mean decode") {
  torch::manual_seed(55);
  ConvVae vae(8, 16, 16, 32);
  const auto x = torch::randn({4, 8, 16, 16});
  const auto [dec, mu, logvar] = vae->forward(x, true);
  CHECK(dec.sizes() == torch::IntArrayRef({4, 3, 16, 16}));
  CHECK(mu.sizes() == torch::IntArrayRef({4, 32}));
  CHECK(logvar.sizes() == torch::IntArrayRef({4, 32}));

  const auto [d1, m1, l1] = vae->forward(x, false);
  const auto [d2, m2, l2] = vae->forward(x, false);
  CHECK(torch::equal(d1, d2));  // no sampling path
  CHECK(torch::equal(m1, m2));
  CHECK(torch::equal(l1, l2));
  const auto [d3, m3, l3] = vae->forward(x, true);
  const auto [d4, m4, l4] = vae->forward(x, true);
  CHECK(!torch::equal(d3, d4));  // reparameterized draws differ
  CHECK(torch::equal(m3, m4));  // posterior itself is deterministic
  CHECK(torch::equal(l3, l4));
}

TEST_CASE("vae loss: zero reconstruction error, closed-form prior divergence") {
  const auto g = unit_grid(8);
  auto mask = torch::ones({2, 1, g.K, g.L});
  auto proj = torch::zeros({2, 1, 2, g.K, g.L});
  proj.index_put_({torch::indexing::Slice(), torch::indexing::Slice(), 0}, 1.0);
  const auto decoded = torch::rand({2, 3, g.K, g.L});
  const auto obs =
      objective::apply_forward_model(decoded.unsqueeze(1), mask.index({torch::indexing::Slice(0, 1)}),
                                     proj.index({torch::indexing::Slice(0, 1)}))
          .squeeze(1);

  auto mu = torch::zeros({2, 5});
  auto logvar = torch::zeros({2, 5});
  const auto zero = vae_loss(decoded, mu, logvar, obs, mask, proj);
  CHECK(zero.recon.item<double>() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(zero.kl.item<double>() == doctest::Approx(0.0).epsilon(1e-10));

  mu = torch::ones({2, 5});
  const auto shifted = vae_loss(decoded, mu, logvar, obs, mask, proj);
  CHECK(shifted.kl.item<double>() == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(shifted.total.item<double>() ==
        doctest::Approx(shifted.recon.item<double>() + 2.5).epsilon(1e-6));
}
