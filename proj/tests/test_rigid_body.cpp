#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kfsi/operators.hpp"
#include "kfsi/rigid_body.hpp"

using namespace kfsi;

TEST_CASE("rotation integration matches the closed-form exponential") {
  Vec3 r(0.3, -0.7, 0.5);
  auto rf = [r](Real) { return r; };
  Mat3 q = integrate_rotation(Mat3::Identity(), rf, 0, 1.0, 1000);
  Mat3 exact = rotation_exp(r, 1.0);
  CHECK((q - exact).norm() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("orthonormality drift stays at round-off over long runs") {
  Vec3 r(1.0, 2.0, -0.5);
  auto rf = [r](Real t) { return Vec3(std::sin(t) * r.x(), r.y(), std::cos(2 * t) * r.z()); };
  Mat3 q = integrate_rotation(Mat3::Identity(), rf, 0, 10.0, 10000);
  Real drift = (q.transpose() * q - Mat3::Identity()).norm();
  CHECK(drift < 1e-12);
  CHECK(q.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotated inertia keeps symmetry and spectrum") {
  Mat3 j0;
  j0 << 2, 0.3, 0, 0.3, 1.5, 0.1, 0, 0.1, 3;
  Mat3 q = rotation_exp(Vec3(0.2, 0.9, -0.4), 1.0);
  Mat3 j = inertia_at(q, j0);
  CHECK((j - j.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-13));
  Eigen::SelfAdjointEigenSolver<Mat3> e0(j0), e1(j);
  CHECK((e0.eigenvalues() - e1.eigenvalues()).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solid velocity field is the rigid field") {
  Grid g(16, 2.0);
  BodyState s;
  s.ell = Vec2(0.5, -1.0);
  s.r = 2.0;
  VectorField us = solid_velocity(g, s);
  Vec2 x = g.center(3, 11);
  CHECK((us.at(3, 11) - (s.ell + 2.0 * perp(x))).norm() == doctest::Approx(0.0));
  // rigid fields have zero deformation on the grid
  CHECK(deformation(us).frobenius2().maxCoeff() == doctest::Approx(0.0).epsilon(1e-22));
}

TEST_CASE("frame maps invert each other away from the grid edge") {
  Grid g(96, 2.0);
  BodyState s;
  s.theta = 0.6;
  s.h = Vec2(0.2, -0.1);
  VectorField u(g);
  u.fill([](Real x, Real y) {
    Real b = std::exp(-4 * (x * x + y * y));
    return Vec2(b * std::sin(x + y), b * std::cos(x - y));
  });
  VectorField lab = body_to_lab(u, s, g);
  VectorField back = lab_to_body(lab, s, g);
  // compare on the central region (double interpolation is O(h^2))
  Real err = 0;
  for (int j = g.n / 4; j < 3 * g.n / 4; ++j)
    for (int i = g.n / 4; i < 3 * g.n / 4; ++i)
      err = std::max(err, (back.at(i, j) - u.at(i, j)).norm());
  CHECK(err < 1e-2);
}

TEST_CASE("out-of-range points are counted") {
  Grid body_grid(16, 1.0), lab_grid(16, 3.0);
  VectorField u(body_grid);
  BodyState s;
  int misses = 0;
  body_to_lab(u, s, lab_grid, &misses);
  CHECK(misses > 0);
}
