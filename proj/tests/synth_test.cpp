#include <cmath>

#include "radarfield/synth.hpp"

// doctest comes last: the tensor library's logging shims define a
// CHECK macro that would otherwise shadow the assertion macro.
#undef CHECK
#include "doctest.h"

using namespace radarfield;
using namespace radarfield::synth;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

SimulationConfig small_cfg() {
  SimulationConfig cfg;
  cfg.K = cfg.L = 16;
  cfg.T = 4;
  return cfg;
}

// Torus pdf: the mode and its periodic images, matching the wrap the
// difference operators assume.
double mode_pdf(const GaussMode& m, double x, double y, int t, double px, double py) {
  const double mx = m.mean[0] + t * m.disp[0];
  const double my = m.mean[1] + t * m.disp[1];
  double acc = 0.0;
  for (int sx = -2; sx <= 2; ++sx)
    for (int sy = -2; sy <= 2; ++sy) {
      const double dx = x - (mx + sx * px);
      const double dy = y - (my + sy * py);
      acc += std::exp(-0.5 * (dx * dx / m.var[0] + dy * dy / m.var[1]));
    }
  return m.weight / (2.0 * kPi * std::sqrt(m.var[0] * m.var[1])) * acc;
}

}  // namespace

TEST_CASE("potential peaks at the mode mean with the closed-form value") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();
  GaussMode m;
  m.mean = {g.cx(5), g.cy(9)};  // exactly on a cell center
  m.var = {0.3, 0.2};
  m.weight = 1.3;
  const auto phi = eval_potential(PotentialMixture{{m}}, g, 0);
  CHECK(phi.at(5, 9) ==
        doctest::Approx(mode_pdf(m, g.cx(5), g.cy(9), 0, g.K * g.dx, g.L * g.dy))
            .epsilon(1e-12));
  // The image tails are tiny at this domain size: the plane closed form is
  // still correct to five decimal places.
  CHECK(phi.at(5, 9) ==
        doctest::Approx(1.3 / (2.0 * kPi * std::sqrt(0.3 * 0.2))).epsilon(1e-4));
}

TEST_CASE("zero weights give a zero potential") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();
  GaussMode m;
  m.mean = {1.0, 1.0};
  m.var = {0.3, 0.3};
  m.weight = 0.0;
  const auto phi = eval_potential(PotentialMixture{{m}}, g, 0);
  for (double v : phi.values()) CHECK(v == 0.0);
}

TEST_CASE("frame shift equals evaluating shifted means") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();
  GaussMode m;
  m.mean = {0.8, 1.4};
  m.var = {0.25, 0.4};
  m.disp = {0.03, -0.02};
  m.weight = 0.7;
  const auto at1 = eval_potential(PotentialMixture{{m}}, g, 1);
  GaussMode shifted = m;
  shifted.mean = {m.mean[0] + m.disp[0], m.mean[1] + m.disp[1]};
  shifted.disp = {0.0, 0.0};
  const auto direct = eval_potential(PotentialMixture{{shifted}}, g, 0);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l)
      CHECK(at1.at(k, l) == doctest::Approx(direct.at(k, l)).epsilon(1e-13));
}

TEST_CASE("mixture invariants: modes present, positive variance") {
  CHECK_THROWS(PotentialMixture{}.validate());
  GaussMode m;
  m.var = {0.0, 0.1};
  m.weight = 1.0;
  CHECK_THROWS(PotentialMixture{{m}}.validate());
}

TEST_CASE("velocity is the negated centered gradient") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();

  auto flat = ScalarField::zeros(g);
  for (auto& v : flat.values()) v = 3.7;
  const auto v0 = velocity_from_potential(flat);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l) {
      CHECK(v0.xat(k, l) == 0.0);
      CHECK(v0.yat(k, l) == 0.0);
    }

  // Linear ramp in x: interior centered difference is exact, so vx = -1.
  auto ramp = ScalarField::zeros(g);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l) ramp.at(k, l) = g.cx(k);
  const auto v1 = velocity_from_potential(ramp);
  for (int k = 1; k < g.K - 1; ++k)
    for (int l = 0; l < g.L; ++l) {
      CHECK(v1.xat(k, l) == doctest::Approx(-1.0).epsilon(1e-12));
      CHECK(v1.yat(k, l) == doctest::Approx(0.0).epsilon(1e-12));
    }

  // Gaussian mode: matches the centered difference of the analytic potential
  // and points away from the peak.
  GaussMode m;
  m.mean = {g.cx(8), g.cy(8)};
  m.var = {0.3, 0.3};
  m.weight = 1.0;
  const auto phi = eval_potential(PotentialMixture{{m}}, g, 0);
  const auto v2 = velocity_from_potential(phi);
  const int probes[5][2] = {{6, 8}, {10, 8}, {8, 6}, {8, 11}, {5, 5}};
  const double px = g.K * g.dx, py = g.L * g.dy;
  for (const auto& p : probes) {
    const int k = p[0], l = p[1];
    const double ref_x =
        -(mode_pdf(m, g.cx(k + 1), g.cy(l), 0, px, py) -
          mode_pdf(m, g.cx(k - 1), g.cy(l), 0, px, py)) /
        (2.0 * g.dx);
    const double ref_y =
        -(mode_pdf(m, g.cx(k), g.cy(l + 1), 0, px, py) -
          mode_pdf(m, g.cx(k), g.cy(l - 1), 0, px, py)) /
        (2.0 * g.dy);
    CHECK(v2.xat(k, l) == doctest::Approx(ref_x).epsilon(1e-9));
    CHECK(v2.yat(k, l) == doctest::Approx(ref_y).epsilon(1e-9));
  }
  CHECK(v2.xat(10, 8) > 0.0);  // right of the peak, pushed further right
  CHECK(v2.xat(6, 8) < 0.0);
}

TEST_CASE("transport step: identities and exact mass conservation") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();
  Rng rng(4242);

  auto rho = ScalarField::zeros(g);
  for (auto& v : rho.values()) v = 0.2 + rng.uniform();

  const auto still = ftcs_step(rho, VectorField::zeros(g), cfg.dt_sim);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l) CHECK(still.at(k, l) == rho.at(k, l));

  auto uni_rho = ScalarField::zeros(g);
  for (auto& v : uni_rho.values()) v = 0.7;
  auto uni_v = VectorField::zeros(g);
  for (auto& v : uni_v.x()) v = 0.4;
  for (auto& v : uni_v.y()) v = -0.3;
  const auto moved = ftcs_step(uni_rho, uni_v, cfg.dt_sim);
  for (int k = 0; k < g.K; ++k)
    for (int l = 0; l < g.L; ++l) CHECK(moved.at(k, l) == doctest::Approx(0.7).epsilon(1e-15));

  auto v = VectorField::zeros(g);
  for (auto& e : v.x()) e = rng.uniform(-1.0, 1.0);
  for (auto& e : v.y()) e = rng.uniform(-1.0, 1.0);
  auto cur = rho;
  for (int i = 0; i < 50; ++i) cur = ftcs_step(cur, v, cfg.dt_sim);
  CHECK(cur.sum() == doctest::Approx(rho.sum()).epsilon(1e-10));
}

TEST_CASE("transport step rejects unstable steps with the offending speeds") {
  const auto cfg = small_cfg();
  const auto g = cfg.geometry();
  auto rho = ScalarField::zeros(g);
  for (auto& v : rho.values()) v = 1.0;
  auto v = VectorField::zeros(g);
  v.xat(3, 3) = 2.0 * g.dx / cfg.dt_sim;  // Courant 2 from vx alone
  try {
    ftcs_step(rho, v, cfg.dt_sim);
    FAIL("expected CflError");
  } catch (const CflError& e) {
    CHECK(e.speed_x == doctest::Approx(2.0 * g.dx / cfg.dt_sim));
    CHECK(e.courant >= 1.0);
  }
}

TEST_CASE("sequence generation is deterministic and mass-conserving") {
  auto cfg = small_cfg();
  const auto a = generate_sequence(cfg, 31);
  const auto b = generate_sequence(cfg, 31);
  const auto c = generate_sequence(cfg, 32);
  REQUIRE(a.frames() == cfg.T);
  a.validate();
  for (int t = 0; t < cfg.T; ++t) {
    for (std::size_t i = 0; i < a.density[t].values().size(); ++i)
      CHECK(a.density[t].values()[i] == b.density[t].values()[i]);
    for (std::size_t i = 0; i < a.velocity[t].x().size(); ++i) {
      CHECK(a.velocity[t].x()[i] == b.velocity[t].x()[i]);
      CHECK(a.velocity[t].y()[i] == b.velocity[t].y()[i]);
    }
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.density[0].values().size(); ++i)
    differs = differs || a.density[0].values()[i] != c.density[0].values()[i];
  CHECK(differs);

  const double mass0 = a.density[0].sum();
  const auto g = cfg.geometry();
  CHECK(mass0 * g.dx * g.dy == doctest::Approx(cfg.init_mass).epsilon(1e-12));
  for (int t = 1; t < cfg.T; ++t)
    CHECK(a.density[t].sum() == doctest::Approx(mass0).epsilon(1e-9));
}
