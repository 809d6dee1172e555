#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kfsi/field.hpp"
#include "kfsi/grid.hpp"

using namespace kfsi;

TEST_CASE("grid coordinates and spacing") {
  Grid g(8, 2.0);
  CHECK(g.h == doctest::Approx(0.5));
  CHECK(g.xc(0) == doctest::Approx(-1.75));
  CHECK(g.xc(7) == doctest::Approx(1.75));
  CHECK(g.xf(0) == doctest::Approx(-2.0));
  CHECK(g.xf(8) == doctest::Approx(2.0));
  CHECK(g.cell_area() == doctest::Approx(0.25));
  CHECK_THROWS(Grid(0, 1.0));
  CHECK_THROWS(Grid(8, -1.0));
}

TEST_CASE("scalar field fill and bilinear sampling is exact on affine data") {
  Grid g(32, 1.0);
  ScalarField f(g);
  f.fill([](Real x, Real y) { return 2 * x - 3 * y + 1; });
  CHECK(f.sample(Vec2(0.3, -0.4)) == doctest::Approx(2 * 0.3 + 3 * 0.4 + 1).epsilon(1e-12));
  CHECK(f.sample(Vec2(0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("vector field set/at round trip") {
  Grid g(4, 1.0);
  VectorField u(g);
  u.set(2, 1, Vec2(3.5, -1.25));
  CHECK(u.at(2, 1).x() == 3.5);
  CHECK(u.at(2, 1).y() == -1.25);
  CHECK(u.at(0, 0).norm() == 0.0);
}

TEST_CASE("tensor field frobenius norm") {
  Grid g(4, 1.0);
  TensorField t(g);
  t.xx()(1, 1) = 3;
  t.xy()(1, 1) = 4;
  CHECK(t.frobenius2()(1, 1) == doctest::Approx(25.0));
  CHECK(t.at(1, 1)(0, 1) == doctest::Approx(4.0));
}
