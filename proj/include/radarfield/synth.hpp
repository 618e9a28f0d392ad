#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "radarfield/grid.hpp"
#include "radarfield/rng.hpp"

namespace radarfield::synth {

struct GaussMode {
  std::array<double, 2> mean{};
  std::array<double, 2> var{};   // diagonal covariance entries
  std::array<double, 2> disp{};  // per-frame displacement of the mean
  double weight = 0.0;
};

// Weighted sum of diagonal-covariance Gaussian densities; the field driving
// either the velocity potential or the initial animal density.
struct PotentialMixture {
  std::vector<GaussMode> modes;
  void validate() const;
};

struct SimulationConfig {
  int K = 32;
  int L = 32;
  int T = 20;
  double domain = 2.8;      // square side length; dx = domain / K
  double dt_sim = 0.001;    // inner transport step
  double dt_sample = 0.025; // frame interval; must be an integer multiple of dt_sim
  int n_modes = 10;

  // Sampling ranges for the two mixtures. The velocity ranges keep the flow
  // gentle enough that one sampled frame interval is well approximated by a
  // single forward-Euler step of the continuity equation.
  double vel_weight_min = 0.1, vel_weight_max = 0.3;
  double vel_var_min = 0.1, vel_var_max = 0.5;
  double dens_weight_min = 0.5, dens_weight_max = 1.5;
  double dens_var_min = 0.15, dens_var_max = 0.5;
  double disp_max = 0.05;   // per-frame mode displacement magnitude

  double init_mass = 1.0;   // sum(rho) * dx * dy of frame 0
  int cfl_retries = 10;

  GridGeometry geometry() const;
  void validate() const;
};

struct CflError : std::runtime_error {
  CflError(double sx, double sy, double number)
      : std::runtime_error("transport step unstable: max |vx| = " + std::to_string(sx) +
                           ", max |vy| = " + std::to_string(sy) +
                           " give Courant number " + std::to_string(number) + " >= 1"),
        speed_x(sx), speed_y(sy), courant(number) {}
  double speed_x, speed_y, courant;
};

// phi(t, x) = sum_i w_i N(x | mu_i + t * disp_i, diag var_i) at all cell centers.
// Modes are wrapped onto the torus (summed over periodic images) so the field
// stays smooth across the wrap seam that the difference operators assume.
ScalarField eval_potential(const PotentialMixture& mix, const GridGeometry& geom, int t);

// v = -grad(phi) via centered differences with periodic wrap.
VectorField velocity_from_potential(const ScalarField& phi);

// One forward-Euler step of d(rho)/dt = -div(v rho), centered differences,
// periodic wrap. Conserves sum(rho) exactly up to rounding. Throws CflError if
// (max|vx|/dx + max|vy|/dy) * dt >= 1.
ScalarField ftcs_step(const ScalarField& rho, const VectorField& v, double dt);

PotentialMixture sample_velocity_mixture(const SimulationConfig& cfg, Rng& rng);
PotentialMixture sample_density_mixture(const SimulationConfig& cfg, Rng& rng);

// T frames; frame t carries v at frame time t and the density advected through
// dt_sample/dt_sim substeps per frame with v held at its frame value. On a CFL
// violation the velocity-mixture weights are halved and the sequence restarts,
// up to cfg.cfl_retries times.
FieldSequence generate_sequence(const SimulationConfig& cfg, std::uint64_t seed);

}  // namespace radarfield::synth
