#include "radarfield/grid.hpp"

#include <algorithm>
#include <cmath>

namespace radarfield {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
  }
}

std::vector<double> affine(const std::vector<double>& in, double scale, double shift) {
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * scale + shift;
  return out;
}

}  // namespace

void GridGeometry::validate() const {
  if (K < 3 || L < 3) throw std::invalid_argument("GridGeometry: K and L must be >= 3");
  if (!(dx > 0.0) || !(dy > 0.0)) throw std::invalid_argument("GridGeometry: cell sizes must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("GridGeometry: dt must be positive");
}

ScalarField::ScalarField(GridGeometry geom, std::vector<double> values)
    : geom_(geom), v_(std::move(values)) {
  geom_.validate();
  if (v_.size() != geom_.cells()) throw std::invalid_argument("ScalarField: size mismatch");
  require_finite(v_, "ScalarField");
}

ScalarField ScalarField::zeros(const GridGeometry& geom) {
  return ScalarField(geom, std::vector<double>(geom.cells(), 0.0));
}

double ScalarField::sum() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s;
}

double ScalarField::min() const { return *std::min_element(v_.begin(), v_.end()); }
double ScalarField::max() const { return *std::max_element(v_.begin(), v_.end()); }

VectorField::VectorField(GridGeometry geom, std::vector<double> vx, std::vector<double> vy)
    : geom_(geom), vx_(std::move(vx)), vy_(std::move(vy)) {
  geom_.validate();
  if (vx_.size() != geom_.cells() || vy_.size() != geom_.cells()) {
    throw std::invalid_argument("VectorField: size mismatch");
  }
  require_finite(vx_, "VectorField.x");
  require_finite(vy_, "VectorField.y");
}

VectorField VectorField::zeros(const GridGeometry& geom) {
  return VectorField(geom, std::vector<double>(geom.cells(), 0.0),
                     std::vector<double>(geom.cells(), 0.0));
}

double VectorField::max_abs_x() const {
  double m = 0.0;
  for (double x : vx_) m = std::max(m, std::fabs(x));
  return m;
}

double VectorField::max_abs_y() const {
  double m = 0.0;
  for (double y : vy_) m = std::max(m, std::fabs(y));
  return m;
}

void FieldSequence::validate() const {
  geom.validate();
  if (density.size() != velocity.size()) throw std::invalid_argument("FieldSequence: frame count mismatch");
  if (density.size() < 2) throw std::invalid_argument("FieldSequence: need at least 2 frames");
  for (const auto& f : density) {
    if (!(f.geometry() == geom)) throw std::invalid_argument("FieldSequence: geometry mismatch");
  }
  for (const auto& f : velocity) {
    if (!(f.geometry() == geom)) throw std::invalid_argument("FieldSequence: geometry mismatch");
  }
}

void NormalizationSpec::validate() const {
  if (!std::isfinite(v_min) || !std::isfinite(v_max) || !std::isfinite(q_min) || !std::isfinite(q_max)) {
    throw std::invalid_argument("NormalizationSpec: non-finite bounds");
  }
  if (!(v_min < v_max) || !(q_min < q_max)) {
    throw std::invalid_argument("NormalizationSpec: degenerate bounds");
  }
}

ScalarField normalize(const ScalarField& q, const NormalizationSpec& spec) {
  spec.validate();
  const double scale = 2.0 / (spec.q_max - spec.q_min);
  return ScalarField(q.geometry(), affine(q.values(), scale, -spec.q_min * scale - 1.0));
}

VectorField normalize(const VectorField& v, const NormalizationSpec& spec) {
  spec.validate();
  const double scale = 2.0 / (spec.v_max - spec.v_min);
  const double shift = -spec.v_min * scale - 1.0;
  return VectorField(v.geometry(), affine(v.x(), scale, shift), affine(v.y(), scale, shift));
}

ScalarField denormalize(const ScalarField& q_tilde, const NormalizationSpec& spec) {
  spec.validate();
  const double scale = 0.5 * (spec.q_max - spec.q_min);
  return ScalarField(q_tilde.geometry(), affine(q_tilde.values(), scale, spec.q_min + scale));
}

VectorField denormalize(const VectorField& v_tilde, const NormalizationSpec& spec) {
  spec.validate();
  const double scale = 0.5 * (spec.v_max - spec.v_min);
  const double shift = spec.v_min + scale;
  return VectorField(v_tilde.geometry(), affine(v_tilde.x(), scale, shift),
                     affine(v_tilde.y(), scale, shift));
}

ScalarField log_transform(const ScalarField& rho, std::optional<double> floor) {
  std::vector<double> out(rho.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = rho.values()[i];
    if (floor) {
      x = std::max(x, *floor);
    } else if (!(x > 0.0)) {
      throw std::domain_error("log_transform: non-positive density without a floor");
    }
    out[i] = std::log(x);
  }
  return ScalarField(rho.geometry(), std::move(out));
}

ScalarField exp_transform(const ScalarField& q) {
  std::vector<double> out(q.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(q.values()[i]);
  return ScalarField(q.geometry(), std::move(out));
}

}  // namespace radarfield
