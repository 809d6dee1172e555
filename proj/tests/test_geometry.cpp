#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kfsi/geometry.hpp"
#include "kfsi/operators.hpp"

using namespace kfsi;

TEST_CASE("disk signed distance is exact") {
  auto body = BodyGeometry::disk(1.0, 2.0);
  CHECK(body.signed_distance(Vec2(2, 0)) == doctest::Approx(1.0));
  CHECK(body.signed_distance(Vec2(0, 0.5)) == doctest::Approx(-0.5));
  CHECK(body.signed_distance(Vec2(3, 4)) == doctest::Approx(4.0));
  CHECK(body.normal(Vec2(0, 2)).isApprox(Vec2(0, 1)));
  CHECK(body.closest_boundary_point(Vec2(0, 2)).isApprox(Vec2(0, 1)));
}

TEST_CASE("disk mass properties") {
  auto body = BodyGeometry::disk(1.0, 2.0);
  CHECK(body.area() == doctest::Approx(kPi));
  CHECK(body.mass() == doctest::Approx(2 * kPi));
  CHECK(body.inertia() == doctest::Approx(kPi));  // rho pi a^4 / 2
  CHECK(body.buoyant_mass() == doctest::Approx(kPi));
  CHECK(body.centroid().norm() == doctest::Approx(0.0));
}

TEST_CASE("square polygon properties and distances") {
  std::vector<Vec2> sq = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  auto body = BodyGeometry::polygon(sq, 2.0);
  CHECK(body.area() == doctest::Approx(4.0));
  CHECK(body.mass() == doctest::Approx(8.0));
  CHECK(body.inertia() == doctest::Approx(16.0 / 3));  // 2 * int x^2+y^2 over [-1,1]^2
  CHECK(body.centroid().norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(body.signed_distance(Vec2(2, 0)) == doctest::Approx(1.0));
  CHECK(body.signed_distance(Vec2(0.5, 0)) == doctest::Approx(-0.5));
  CHECK(body.signed_distance(Vec2(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(body.normal(Vec2(1.5, 0)).isApprox(Vec2(1, 0)));
  CHECK(body.perimeter() == doctest::Approx(8.0));
  // CW ordering rejected
  std::vector<Vec2> cw = {{-1, -1}, {-1, 1}, {1, 1}, {1, -1}};
  CHECK_THROWS(BodyGeometry::polygon(cw, 1.0));
}

TEST_CASE("strip mask area approximates the annulus") {
  Grid g(256, 2.0);
  auto body = BodyGeometry::disk(1.0, 2.0);
  StripSpec s{0.5, 0.5};  // width 0.25
  auto m = strip_mask(g, body, s);
  Real area = m.cells * g.cell_area();
  Real exact = kPi * ((1.25 * 1.25) - 1.0);
  CHECK(area == doctest::Approx(exact).epsilon(0.03));
  CHECK_FALSE(m.under_resolved);

  StripSpec tiny{0.5, 0.01};  // width far below 2h
  auto mt = strip_mask(g, body, tiny);
  CHECK(mt.under_resolved);
}

TEST_CASE("masks partition the box") {
  Grid g(64, 2.0);
  auto body = BodyGeometry::disk(1.0, 2.0);
  auto fm = fluid_mask(g, body);
  auto bm = body_mask(g, body);
  // no cell is both fluid and body
  CHECK((fm.data() * bm.data()).sum() == doctest::Approx(0.0));
  Real body_area = bm.data().sum() * g.cell_area();
  CHECK(body_area == doctest::Approx(kPi).epsilon(0.02));
}

TEST_CASE("energy-space inner product on a simple configuration") {
  // constant field (1,0), 3x3 box, unit disk of density 2:
  // fluid part (9 - pi), body part 2 pi.
  Grid g(192, 1.5);
  auto body = BodyGeometry::disk(1.0, 2.0);
  auto bm = body_mask(g, body);
  VectorField phi(g);
  phi.fill([](Real, Real) { return Vec2(1, 0); });
  Real ip = inner_product_H(phi, phi, bm, 2.0);
  CHECK(ip == doctest::Approx(9 - kPi + 2 * kPi).epsilon(0.01));
}

TEST_CASE("inner product is symmetric, bilinear and positive") {
  Grid g(48, 1.0);
  auto body = BodyGeometry::disk(0.4, 3.0);
  auto bm = body_mask(g, body);
  VectorField a(g), b(g), c(g);
  a.fill([](Real x, Real y) { return Vec2(std::sin(3 * x), std::cos(2 * y)); });
  b.fill([](Real x, Real y) { return Vec2(x * y, x - y); });
  c.fill([](Real x, Real y) { return Vec2(std::cos(x + y), std::sin(x - y)); });
  Real ab = inner_product_H(a, b, bm, 3.0);
  Real ba = inner_product_H(b, a, bm, 3.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
  // bilinearity in the first slot
  VectorField asum(g);
  asum.x().data() = 2 * a.x().data() + c.x().data();
  asum.y().data() = 2 * a.y().data() + c.y().data();
  Real lhs = inner_product_H(asum, b, bm, 3.0);
  Real rhs = 2 * ab + inner_product_H(c, b, bm, 3.0);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(inner_product_H(a, a, bm, 3.0) > 0);
}
