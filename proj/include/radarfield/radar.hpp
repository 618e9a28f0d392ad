#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "radarfield/grid.hpp"
#include "radarfield/rng.hpp"

namespace radarfield::radar {

struct RadarConfig {
  std::array<double, 2> position{};
  double range = 0.0;  // may be +infinity
};

// Radar geometry baked onto the grid: per radar a boolean coverage mask and
// per-cell unit vectors pointing from the radar to the cell. Cells outside
// the mask carry exact (0, 0) vectors.
struct RadarSet {
  GridGeometry geom;
  std::vector<RadarConfig> radars;
  std::vector<std::vector<std::uint8_t>> mask;  // per radar, K*L
  std::vector<std::vector<double>> ax, ay;      // per radar, K*L

  int count() const { return static_cast<int>(radars.size()); }
};

// Per-frame measurements: one radial-velocity plane and one log-density plane
// per radar, exact zeros outside that radar's mask.
struct Observation {
  int frame = 0;
  std::vector<std::vector<double>> radial;   // per radar, K*L
  std::vector<std::vector<double>> logdens;  // per radar, K*L
};

RadarSet build_projections(const std::vector<RadarConfig>& radars, const GridGeometry& geom);

// radial_n = mask_n * (a_n . v), logdens_n = mask_n * q. Noiseless.
Observation forward(const VectorField& v, const ScalarField& q, const RadarSet& rs);

// Adds N(0, sigma^2) to in-mask entries only.
Observation add_noise(const Observation& obs, const RadarSet& rs, double sigma, Rng& rng);

// Positions uniform over the domain shrunk by a 5% margin per side.
std::vector<RadarConfig> sample_radars(int n, double range, const GridGeometry& geom, Rng& rng);

struct CoverageStats {
  double mean = 0.0;
  double sd = 0.0;
};

// Fraction of cells covered by the union of n radars at the given range,
// averaged over `draws` independent placements.
CoverageStats coverage_stats(int n, double range, const GridGeometry& geom, int draws,
                             std::uint64_t seed);

}  // namespace radarfield::radar
