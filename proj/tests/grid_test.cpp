#include <cmath>
#include <stdexcept>

#include "radarfield/grid.hpp"
#include "radarfield/rng.hpp"

// doctest comes last: the tensor library's logging shims define a
// CHECK macro that would otherwise shadow the assertion macro.
#undef CHECK
#include "doctest.h"

using namespace radarfield;

namespace {

GridGeometry square(int n, double side) {
  GridGeometry g;
  g.K = g.L = n;
  g.dx = g.dy = side / n;
  g.x0 = g.y0 = g.dx / 2.0;
  g.dt = 0.025;
  return g;
}

}  // namespace

TEST_CASE("cell centers tile the domain") {
  const auto g = square(32, 2.8);
  g.validate();
  CHECK(g.cx(0) == doctest::Approx(g.dx / 2).epsilon(1e-15));
  CHECK(g.cx(31) == doctest::Approx(2.8 - g.dx / 2).epsilon(1e-15));
  CHECK(g.xmin() == doctest::Approx(0.0));
  CHECK(g.xmax() == doctest::Approx(2.8));
  CHECK(g.cells() == 32u * 32u);
  CHECK(g.idx(1, 0) == 32u);  // row-major, k major
  CHECK(g.idx(0, 1) == 1u);
}

TEST_CASE("geometry validation rejects degenerate grids") {
  auto g = square(32, 2.8);
  g.K = 2;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = square(32, 2.8);
  g.dx = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("normalize maps bounds onto [-1, 1] and round-trips") {
  const auto g = square(4, 1.0);
  NormalizationSpec spec{-2.0, 3.0, -18.0, -0.5};
  auto q = ScalarField::zeros(g);
  q.at(0, 0) = -18.0;
  q.at(0, 1) = -0.5;
  q.at(1, 0) = 0.5 * (-18.0 + -0.5);
  q.at(3, 3) = -7.3;
  const auto qn = normalize(q, spec);
  CHECK(qn.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(qn.at(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(qn.at(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
  const auto qb = denormalize(qn, spec);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) CHECK(qb.at(k, l) == doctest::Approx(q.at(k, l)).epsilon(1e-14));

  auto v = VectorField::zeros(g);
  v.xat(2, 2) = -2.0;
  v.yat(2, 2) = 3.0;
  const auto vn = normalize(v, spec);
  CHECK(vn.xat(2, 2) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(vn.yat(2, 2) == doctest::Approx(1.0).epsilon(1e-14));
  const auto vb = denormalize(vn, spec);
  CHECK(vb.xat(2, 2) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(vb.yat(2, 2) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("normalization spec validation") {
  NormalizationSpec bad{1.0, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("log transform floors or rejects non-positive density") {
  const auto g = square(3, 1.0);
  auto rho = ScalarField::zeros(g);
  rho.at(0, 0) = 1.0;
  rho.at(0, 1) = -0.2;
  const auto q = log_transform(rho, 1e-8);
  CHECK(q.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q.at(0, 1) == doctest::Approx(std::log(1e-8)).epsilon(1e-15));
  CHECK_THROWS_AS(log_transform(rho), std::domain_error);

  auto pos = ScalarField::zeros(g);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) pos.at(k, l) = 0.1 + k + l;
  const auto back = exp_transform(log_transform(pos));
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      CHECK(back.at(k, l) == doctest::Approx(pos.at(k, l)).epsilon(1e-14));
}

TEST_CASE("seed derivation separates streams and reproduces") {
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));

  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.raw() == b.raw());
}

TEST_CASE("rng value mappings stay in range with sane moments") {
  Rng r(99);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));

  for (int i = 0; i < 1000; ++i) CHECK(r.integer(7) < 7u);

  double m = 0.0, m2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m += z;
    m2 += z * z;
  }
  m /= n;
  m2 /= n;
  CHECK(m == doctest::Approx(0.0).epsilon(1).scale(0.05));
  CHECK(m2 - m * m == doctest::Approx(1.0).epsilon(0.05));
}
