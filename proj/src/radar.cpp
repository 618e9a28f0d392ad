#include "radarfield/radar.hpp"

#include <cmath>
#include <stdexcept>

namespace radarfield::radar {

RadarSet build_projections(const std::vector<RadarConfig>& radars, const GridGeometry& geom) {
  geom.validate();
  RadarSet rs;
  rs.geom = geom;
  rs.radars = radars;
  for (const auto& r : radars) {
    if (!(r.range > 0.0)) throw std::invalid_argument("build_projections: range must be positive");
    if (r.position[0] < geom.xmin() || r.position[0] > geom.xmax() ||
        r.position[1] < geom.ymin() || r.position[1] > geom.ymax()) {
      throw std::invalid_argument("build_projections: radar outside the domain");
    }
    std::vector<std::uint8_t> m(geom.cells(), 0);
    std::vector<double> ax(geom.cells(), 0.0), ay(geom.cells(), 0.0);
    for (int k = 0; k < geom.K; ++k) {
      for (int l = 0; l < geom.L; ++l) {
        const double ddx = geom.cx(k) - r.position[0];
        const double ddy = geom.cy(l) - r.position[1];
        const double dist = std::sqrt(ddx * ddx + ddy * ddy);
        // dist == 0: radial direction undefined, cell stays unmeasured.
        if (dist > 0.0 && dist <= r.range) {
          const std::size_t i = geom.idx(k, l);
          m[i] = 1;
          ax[i] = ddx / dist;
          ay[i] = ddy / dist;
        }
      }
    }
    rs.mask.push_back(std::move(m));
    rs.ax.push_back(std::move(ax));
    rs.ay.push_back(std::move(ay));
  }
  return rs;
}

Observation forward(const VectorField& v, const ScalarField& q, const RadarSet& rs) {
  if (!(v.geometry() == rs.geom) || !(q.geometry() == rs.geom)) {
    throw std::invalid_argument("forward: geometry mismatch");
  }
  Observation obs;
  const std::size_t cells = rs.geom.cells();
  for (int n = 0; n < rs.count(); ++n) {
    std::vector<double> r(cells, 0.0), d(cells, 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
      if (rs.mask[n][i]) {
        r[i] = rs.ax[n][i] * v.x()[i] + rs.ay[n][i] * v.y()[i];
        d[i] = q.values()[i];
      }
    }
    obs.radial.push_back(std::move(r));
    obs.logdens.push_back(std::move(d));
  }
  return obs;
}

Observation add_noise(const Observation& obs, const RadarSet& rs, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  if (obs.radial.size() != static_cast<std::size_t>(rs.count())) {
    throw std::invalid_argument("add_noise: radar count mismatch");
  }
  Observation out = obs;
  for (int n = 0; n < rs.count(); ++n) {
    for (std::size_t i = 0; i < rs.geom.cells(); ++i) {
      if (rs.mask[n][i]) {
        out.radial[n][i] += rng.normal(0.0, sigma);
        out.logdens[n][i] += rng.normal(0.0, sigma);
      }
    }
  }
  return out;
}

std::vector<RadarConfig> sample_radars(int n, double range, const GridGeometry& geom, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_radars: need n >= 1");
  const double mx = 0.05 * (geom.xmax() - geom.xmin());
  const double my = 0.05 * (geom.ymax() - geom.ymin());
  std::vector<RadarConfig> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    RadarConfig r;
    r.position = {rng.uniform(geom.xmin() + mx, geom.xmax() - mx),
                  rng.uniform(geom.ymin() + my, geom.ymax() - my)};
    r.range = range;
    out.push_back(r);
  }
  return out;
}

CoverageStats coverage_stats(int n, double range, const GridGeometry& geom, int draws,
                             std::uint64_t seed) {
  if (draws < 2) throw std::invalid_argument("coverage_stats: need draws >= 2");
  Rng rng(seed);
  std::vector<double> fr(draws);
  for (int d = 0; d < draws; ++d) {
    const RadarSet rs = build_projections(sample_radars(n, range, geom, rng), geom);
    std::size_t covered = 0;
    for (std::size_t i = 0; i < geom.cells(); ++i) {
      for (int r = 0; r < rs.count(); ++r) {
        if (rs.mask[r][i]) {
          ++covered;
          break;
        }
      }
    }
    fr[d] = static_cast<double>(covered) / geom.cells();
  }
  CoverageStats st;
  for (double f : fr) st.mean += f;
  st.mean /= draws;
  double ss = 0.0;
  for (double f : fr) ss += (f - st.mean) * (f - st.mean);
  st.sd = std::sqrt(ss / (draws - 1));
  return st;
}

}  // namespace radarfield::radar
