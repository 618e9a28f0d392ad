#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarfield {

// Regular 2D grid. Index k runs along x, l along y; arrays are row-major with
// index k * L + l. (x0, y0) is the center of cell (0, 0).
struct GridGeometry {
  int K = 0;
  int L = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dt = 0.0;  // frame interval

  void validate() const;

  double cx(int k) const { return x0 + k * dx; }
  double cy(int l) const { return y0 + l * dy; }
  std::size_t cells() const { return static_cast<std::size_t>(K) * L; }
  std::size_t idx(int k, int l) const { return static_cast<std::size_t>(k) * L + l; }

  // Domain bounding box (cells tile it exactly).
  double xmin() const { return x0 - 0.5 * dx; }
  double xmax() const { return x0 + (K - 0.5) * dx; }
  double ymin() const { return y0 - 0.5 * dy; }
  double ymax() const { return y0 + (L - 0.5) * dy; }

  bool operator==(const GridGeometry&) const = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridGeometry geom, std::vector<double> values);
  static ScalarField zeros(const GridGeometry& geom);

  const GridGeometry& geometry() const { return geom_; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  double at(int k, int l) const { return v_[static_cast<std::size_t>(k) * geom_.L + l]; }
  double& at(int k, int l) { return v_[static_cast<std::size_t>(k) * geom_.L + l]; }

  double sum() const;
  double min() const;
  double max() const;

 private:
  GridGeometry geom_;
  std::vector<double> v_;
};

class VectorField {
 public:
  VectorField() = default;
  VectorField(GridGeometry geom, std::vector<double> vx, std::vector<double> vy);
  static VectorField zeros(const GridGeometry& geom);

  const GridGeometry& geometry() const { return geom_; }
  const std::vector<double>& x() const { return vx_; }
  const std::vector<double>& y() const { return vy_; }
  std::vector<double>& x() { return vx_; }
  std::vector<double>& y() { return vy_; }

  double xat(int k, int l) const { return vx_[static_cast<std::size_t>(k) * geom_.L + l]; }
  double yat(int k, int l) const { return vy_[static_cast<std::size_t>(k) * geom_.L + l]; }
  double& xat(int k, int l) { return vx_[static_cast<std::size_t>(k) * geom_.L + l]; }
  double& yat(int k, int l) { return vy_[static_cast<std::size_t>(k) * geom_.L + l]; }

  double max_abs_x() const;
  double max_abs_y() const;

 private:
  GridGeometry geom_;
  std::vector<double> vx_, vy_;
};

// T frames of paired velocity and density fields on one shared grid.
struct FieldSequence {
  GridGeometry geom;
  std::vector<VectorField> velocity;
  std::vector<ScalarField> density;

  int frames() const { return static_cast<int>(density.size()); }
  void validate() const;  // shared geometry, T >= 2
};

// Affine rescale bounds per quantity: velocity components share one pair of
// bounds, log-densities the other. normalize maps [min, max] onto [-1, 1].
struct NormalizationSpec {
  double v_min = 0.0;
  double v_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;

  void validate() const;  // min < max per quantity
};

ScalarField normalize(const ScalarField& q, const NormalizationSpec& spec);
VectorField normalize(const VectorField& v, const NormalizationSpec& spec);
ScalarField denormalize(const ScalarField& q_tilde, const NormalizationSpec& spec);
VectorField denormalize(const VectorField& v_tilde, const NormalizationSpec& spec);

// q = log(rho), with rho clamped to `floor` first when a floor is given.
// Without a floor, rho <= 0 anywhere is an error.
ScalarField log_transform(const ScalarField& rho, std::optional<double> floor = std::nullopt);
ScalarField exp_transform(const ScalarField& q);

}  // namespace radarfield
