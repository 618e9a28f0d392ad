#include "radarfield/synth.hpp"

#include <cmath>

namespace radarfield::synth {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void PotentialMixture::validate() const {
  if (modes.empty()) throw std::invalid_argument("PotentialMixture: need at least one mode");
  for (const auto& m : modes) {
    if (!(m.var[0] > 0.0) || !(m.var[1] > 0.0)) {
      throw std::invalid_argument("PotentialMixture: covariance diagonals must be positive");
    }
    if (!(m.weight >= 0.0)) throw std::invalid_argument("PotentialMixture: negative weight");
  }
}

GridGeometry SimulationConfig::geometry() const {
  const double dx = domain / K;
  const double dy = domain / L;
  return GridGeometry{K, L, dx, dy, dx / 2.0, dy / 2.0, dt_sample};
}

void SimulationConfig::validate() const {
  geometry().validate();
  if (T < 2) throw std::invalid_argument("SimulationConfig: T must be >= 2");
  if (!(dt_sim > 0.0) || !(dt_sample > 0.0)) throw std::invalid_argument("SimulationConfig: step sizes must be positive");
  const double ratio = dt_sample / dt_sim;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw std::invalid_argument("SimulationConfig: dt_sample must be an integer multiple of dt_sim");
  }
  if (n_modes < 1) throw std::invalid_argument("SimulationConfig: n_modes must be >= 1");
  if (cfl_retries < 0) throw std::invalid_argument("SimulationConfig: cfl_retries must be >= 0");
}

namespace {

// One axis of a wrapped Gaussian: sum over periodic images so the mode is
// smooth across the wrap seam. Two image rings leave a truncation tail below
// 1e-13 of the peak for the variances used here.
std::vector<double> axis_profile(int n, double coord0, double step, double period, double mean,
                                 double var) {
  std::vector<double> out(n);
  const double m0 = mean - period * std::floor(mean / period);
  for (int i = 0; i < n; ++i) {
    const double x = coord0 + i * step;
    double acc = 0.0;
    for (int s = -2; s <= 2; ++s) {
      const double d = x - (m0 + s * period);
      acc += std::exp(-d * d / (2.0 * var));
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace

ScalarField eval_potential(const PotentialMixture& mix, const GridGeometry& geom, int t) {
  mix.validate();
  if (t < 0) throw std::invalid_argument("eval_potential: negative frame index");
  const double px = geom.K * geom.dx;
  const double py = geom.L * geom.dy;
  std::vector<double> out(geom.cells(), 0.0);
  for (const auto& m : mix.modes) {
    const double mx = m.mean[0] + t * m.disp[0];
    const double my = m.mean[1] + t * m.disp[1];
    const double norm = m.weight / (kTwoPi * std::sqrt(m.var[0] * m.var[1]));
    const auto gx = axis_profile(geom.K, geom.x0, geom.dx, px, mx, m.var[0]);
    const auto gy = axis_profile(geom.L, geom.y0, geom.dy, py, my, m.var[1]);
    for (int k = 0; k < geom.K; ++k) {
      const double row = norm * gx[static_cast<std::size_t>(k)];
      for (int l = 0; l < geom.L; ++l) {
        out[geom.idx(k, l)] += row * gy[static_cast<std::size_t>(l)];
      }
    }
  }
  return ScalarField(geom, std::move(out));
}

VectorField velocity_from_potential(const ScalarField& phi) {
  const GridGeometry& g = phi.geometry();
  std::vector<double> vx(g.cells()), vy(g.cells());
  for (int k = 0; k < g.K; ++k) {
    const int kp = (k + 1) % g.K;
    const int km = (k + g.K - 1) % g.K;
    for (int l = 0; l < g.L; ++l) {
      const int lp = (l + 1) % g.L;
      const int lm = (l + g.L - 1) % g.L;
      vx[g.idx(k, l)] = -(phi.at(kp, l) - phi.at(km, l)) / (2.0 * g.dx);
      vy[g.idx(k, l)] = -(phi.at(k, lp) - phi.at(k, lm)) / (2.0 * g.dy);
    }
  }
  return VectorField(g, std::move(vx), std::move(vy));
}

ScalarField ftcs_step(const ScalarField& rho, const VectorField& v, double dt) {
  const GridGeometry& g = rho.geometry();
  if (!(v.geometry() == g)) throw std::invalid_argument("ftcs_step: geometry mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("ftcs_step: dt must be positive");
  const double sx = v.max_abs_x();
  const double sy = v.max_abs_y();
  const double courant = sx * dt / g.dx + sy * dt / g.dy;
  if (courant >= 1.0) throw CflError(sx, sy, courant);

  std::vector<double> out(g.cells());
  for (int k = 0; k < g.K; ++k) {
    const int kp = (k + 1) % g.K;
    const int km = (k + g.K - 1) % g.K;
    for (int l = 0; l < g.L; ++l) {
      const int lp = (l + 1) % g.L;
      const int lm = (l + g.L - 1) % g.L;
      const double djx = v.xat(kp, l) * rho.at(kp, l) - v.xat(km, l) * rho.at(km, l);
      const double djy = v.yat(k, lp) * rho.at(k, lp) - v.yat(k, lm) * rho.at(k, lm);
      out[g.idx(k, l)] = rho.at(k, l) - dt * (djx / (2.0 * g.dx) + djy / (2.0 * g.dy));
    }
  }
  return ScalarField(g, std::move(out));
}

namespace {

PotentialMixture sample_mixture(const SimulationConfig& cfg, Rng& rng, double w_lo, double w_hi,
                                double var_lo, double var_hi) {
  PotentialMixture mix;
  mix.modes.resize(cfg.n_modes);
  for (auto& m : mix.modes) {
    m.mean = {rng.uniform(0.0, cfg.domain), rng.uniform(0.0, cfg.domain)};
    m.var = {rng.uniform(var_lo, var_hi), rng.uniform(var_lo, var_hi)};
    m.weight = rng.uniform(w_lo, w_hi);
    const double mag = rng.uniform(0.0, cfg.disp_max);
    const double ang = rng.uniform(0.0, kTwoPi);
    m.disp = {mag * std::cos(ang), mag * std::sin(ang)};
  }
  return mix;
}

}  // namespace

PotentialMixture sample_velocity_mixture(const SimulationConfig& cfg, Rng& rng) {
  return sample_mixture(cfg, rng, cfg.vel_weight_min, cfg.vel_weight_max, cfg.vel_var_min,
                        cfg.vel_var_max);
}

PotentialMixture sample_density_mixture(const SimulationConfig& cfg, Rng& rng) {
  return sample_mixture(cfg, rng, cfg.dens_weight_min, cfg.dens_weight_max, cfg.dens_var_min,
                        cfg.dens_var_max);
}

FieldSequence generate_sequence(const SimulationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const GridGeometry geom = cfg.geometry();
  const int substeps = static_cast<int>(std::llround(cfg.dt_sample / cfg.dt_sim));

  Rng rng(seed);
  PotentialMixture vel_mix = sample_velocity_mixture(cfg, rng);
  PotentialMixture dens_mix = sample_density_mixture(cfg, rng);
  // Displacement belongs to the velocity potential; the density mixture only
  // seeds frame 0 and is advected from there.
  for (auto& m : dens_mix.modes) m.disp = {0.0, 0.0};

  ScalarField rho0 = eval_potential(dens_mix, geom, 0);
  const double mass = rho0.sum() * geom.dx * geom.dy;
  if (!(mass > 0.0)) throw std::runtime_error("generate_sequence: degenerate initial density");
  {
    std::vector<double> scaled = rho0.values();
    for (double& x : scaled) x *= cfg.init_mass / mass;
    rho0 = ScalarField(geom, std::move(scaled));
  }

  for (int attempt = 0; attempt <= cfg.cfl_retries; ++attempt) {
    FieldSequence seq;
    seq.geom = geom;
    try {
      ScalarField rho = rho0;
      for (int t = 0; t < cfg.T; ++t) {
        const VectorField v = velocity_from_potential(eval_potential(vel_mix, geom, t));
        seq.velocity.push_back(v);
        seq.density.push_back(rho);
        if (t + 1 < cfg.T) {
          for (int s = 0; s < substeps; ++s) rho = ftcs_step(rho, v, cfg.dt_sim);
        }
      }
      seq.validate();
      return seq;
    } catch (const CflError&) {
      if (attempt == cfg.cfl_retries) throw;
      for (auto& m : vel_mix.modes) m.weight *= 0.5;
    }
  }
  throw std::logic_error("generate_sequence: unreachable");
}

}  // namespace radarfield::synth
