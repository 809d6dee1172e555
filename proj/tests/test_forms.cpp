#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

/// @file test_forms.cpp
/// @brief Weak-formulation algebra: trilinear convective form against a dense
///        independent oracle, energy neutrality, gravity functional closed
///        forms, integration-by-parts identity suite, and weak residuals of
///        manufactured and computed trajectories.

#include <random>

#include "doctest.h"
#include "random_fields.hpp"
#include "simpson2d.hpp"

using namespace kfsi;
using namespace kfsi::testfields;

namespace {

const BodyGeometry kDisk = BodyGeometry::disk(0.5, 2.0);

TestField scaled_path_field(Real T) {
  TestField f = rigid_cutoff_field(Vec2(0.4, 0.9), -0.6, 0.55, 0.95);
  auto vel = f.vel;
  auto jac = f.jac;
  f.vel = [=](const Vec2& p) -> Vec2 { return T * vel(p); };
  f.jac = [=](const Vec2& p) -> Mat2 { return T * jac(p); };
  f.ell = T * f.ell;
  f.r = T * f.r;
  return f;
}

}  // namespace

TEST_CASE("analytic streams have exact divergence and consistent jacobians") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<Real> ur(-1.5, 1.5);
  auto check = [&](const TestField& f, bool solenoidal) {
    for (int k = 0; k < 40; ++k) {
      Vec2 p(ur(rng), ur(rng));
      Mat2 j = f.jac(p);
      if (solenoidal) CHECK(std::abs(j(0, 0) + j(1, 1)) < 1e-13 * (1 + j.norm()));
      const Real d = 1e-5;
      Mat2 fd;
      fd.col(0) = (f.vel(p + Vec2(d, 0)) - f.vel(p - Vec2(d, 0))) / (2 * d);
      fd.col(1) = (f.vel(p + Vec2(0, d)) - f.vel(p - Vec2(0, d))) / (2 * d);
      CHECK((j - fd).norm() < 1e-6 * (1 + j.norm()));
    }
  };
  check(bump_field(Vec2(0.3, -0.2), 0.4, 0.7, 0.3, -0.5), true);
  check(rigid_cutoff_field(Vec2(0.8, -0.4), 0.9, 0.55, 0.95), true);
  check(windowed_trig_field(rng), true);
  check(noslip_field(rng, 0.5), true);
  check(gradient_field(rng), false);  // curl-free, jacobian still consistent
}

TEST_CASE("convective form matches a dense independent quadrature") {
  Grid g(64, 2.0);
  // deterministic anchor, expected value frozen from the dense oracle
  TestField u = bump_field(Vec2(1.24, 0.10), 0.145, 0.8, 0.3, -0.2);
  TestField v = bump_field(Vec2(1.18, 0.28), 0.150, -0.6, 0.1, 0.4);
  TestField w = bump_field(Vec2(1.26, -0.05), 0.140, 0.5, -0.3, 0.2);
  Real bg = trilinear_b(g, u, v, w, kDisk);
  CHECK(bg == doctest::Approx(-0.1464717546637716).epsilon(1e-9));

  std::mt19937 rng(20260823);
  std::uniform_real_distribution<Real> ur(0, 1);
  for (int k = 0; k < 5; ++k) {
    Real base = 2 * kPi * ur(rng);
    TestField a = annulus_bump(rng, base);
    TestField b = annulus_bump(rng, base);
    TestField c = annulus_bump(rng, base);
    Real grid_val = trilinear_b(g, a, b, c, kDisk);
    Real dense = oracle::dense_convection(2.0, 512, a.vel, b.jac, b.vel, c.jac, c.vel);
    CHECK(std::abs(grid_val - dense) <= 1e-10 * std::max(Real(1), std::abs(grid_val)));
  }
}

TEST_CASE("transport pairing is energy neutral") {
  Grid g(64, 2.0);
  std::mt19937 rng(42);
  Real worst = 0;
  for (int k = 0; k < 100; ++k) {
    TestField u = combined_field(rng), v = combined_field(rng);
    Real scale = (1 + weighted_h1_seminorm(g, u)) * std::pow(1 + weighted_h1_seminorm(g, v), 2);
    worst = std::max(worst, std::abs(trilinear_b(g, u, v, v, kDisk)) / scale);
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("convective form is trilinear, antisymmetric, and guarded") {
  Grid g(64, 2.0);
  std::mt19937 rng(99);
  TestField u1 = combined_field(rng), u2 = combined_field(rng);
  TestField v = combined_field(rng), w = combined_field(rng);
  const Real al = 1.7;
  TestField ul;
  auto u1v = u1.vel;
  auto u2v = u2.vel;
  auto u1j = u1.jac;
  auto u2j = u2.jac;
  ul.vel = [=](const Vec2& p) -> Vec2 { return al * u1v(p) + u2v(p); };
  ul.jac = [=](const Vec2& p) -> Mat2 { return al * u1j(p) + u2j(p); };
  ul.ell = al * u1.ell + u2.ell;
  ul.r = al * u1.r + u2.r;
  ul.support_radius = std::max(u1.support_radius, u2.support_radius);

  Real lhs = trilinear_b(g, ul, v, w, kDisk);
  Real rhs = al * trilinear_b(g, u1, v, w, kDisk) + trilinear_b(g, u2, v, w, kDisk);
  CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(lhs)));
  CHECK(trilinear_b(g, ul, v, w, kDisk) + trilinear_b(g, ul, w, v, kDisk) == 0);

  TestField unbounded;  // no support radius: not admissible in the last slot
  unbounded.vel = [](const Vec2&) { return Vec2(1, 0); };
  unbounded.jac = [](const Vec2&) { return Mat2::Zero().eval(); };
  CHECK_THROWS_AS(trilinear_b(g, u1, v, unbounded, kDisk), std::invalid_argument);
  CHECK(weighted_h1_seminorm(g, v) < 1e3);
}

TEST_CASE("gravity functional reproduces closed forms and stays linear") {
  BodyGeometry heavy = BodyGeometry::disk(1.0, 2.0);
  Mat2 I = Mat2::Identity();
  Vec2 grav(0, -9.8);
  CHECK(forcing_f(I, grav, Vec2(0, 1), 0, heavy) == doctest::Approx(-9.8 * kPi).epsilon(1e-12));
  CHECK(forcing_f(I, Vec2::Zero(), Vec2(0.3, 1), 0.7, heavy) == 0);
  BodyGeometry neutral = BodyGeometry::disk(1.0, 1.0);
  CHECK(forcing_f(I, grav, Vec2(0, 1), 0.7, neutral) == 0);

  Real a = forcing_f(I, grav, Vec2(0.2, 0.5), 0.3, heavy);
  Real b = forcing_f(I, grav, Vec2(0.4, 1.0), 0.6, heavy);
  CHECK(b == doctest::Approx(2 * a).epsilon(1e-12));
  CHECK(forcing_f(I, 2 * grav, Vec2(0.2, 0.5), 0.3, heavy) == doctest::Approx(2 * a).epsilon(1e-12));

  // same formula the solver integrates as the work ledger
  NSConfig c;
  c.grid = Grid(32, 2.0);
  c.body = BodyGeometry::disk(0.5, 2.0);
  c.gravity = grav;
  NSSolver s(c);
  BodyState bs;
  bs.ell = Vec2(0.3, -1.1);
  bs.r = 0.4;
  bs.theta = 0.7;
  CHECK(s.work_rate(bs) ==
        doctest::Approx(forcing_f(bs.Q(), grav, bs.ell, bs.r, c.body)).epsilon(1e-12));
}

TEST_CASE("integration-by-parts identities hold at second order") {
  for (int kind = 0; kind < 5; ++kind) {
    for (int rep = 0; rep < 3; ++rep) {
      std::mt19937 local(1000 + 17 * rep + kind);
      TestField U, V;
      if (kind == 4) {
        U = noslip_field(local, 0.5);
        V = bump_field(Vec2(0.4, -0.2), 0.6, 1.0, 0.3, -0.2);
      } else if (kind == 3) {
        U = windowed_trig_field(local);
        V = (rep == 2) ? gradient_field(local) : windowed_trig_field(local);
      } else {
        U = windowed_trig_field(local);
        V = windowed_trig_field(local);
      }
      Real gap64 = 0, gap256 = 0;
      for (int n : {64, 128, 256}) {
        Grid g(n, 2.0);
        IdentityPair p = identity_check(static_cast<IdentityKind>(kind), g, U, V,
                                        kind == 4 ? &kDisk : nullptr);
        if (n == 64) gap64 = p.rel_gap();
        if (n == 256) {
          gap256 = p.rel_gap();
          CHECK(p.rel_gap() <= 1e-3);
        }
      }
      Real order = std::log2(gap64 / gap256) / 2;
      CHECK(order >= 1.8);
    }
  }
}

TEST_CASE("identity hypotheses are enforced, not silently ignored") {
  Grid g(64, 2.0);
  std::mt19937 rng(5);
  TestField U = windowed_trig_field(rng);
  TestField bad = gradient_field(rng);  // not divergence-free
  CHECK_THROWS_AS(identity_check(IdentityKind::P1, g, U, bad), std::invalid_argument);
  CHECK_THROWS_AS(identity_check(IdentityKind::P2, g, U, bad), std::invalid_argument);
  CHECK_THROWS_AS(identity_check(IdentityKind::boundary_moments, g, U, U, nullptr),
                  std::invalid_argument);
  // first field of the boundary kind must vanish on the circle
  CHECK_THROWS_AS(identity_check(IdentityKind::boundary_moments, g, U, U, &kDisk),
                  std::invalid_argument);
}

TEST_CASE("weak residual vanishes for zero data and converges when manufactured") {
  NSConfig c;
  c.grid = Grid(64, 2.0);
  c.body = BodyGeometry::disk(0.5, 2.0);
  c.nu = 0.01;
  c.ell0 = Vec2(0.7, -0.3);
  NSSolver s(c);

  TestFieldPath vp;
  vp.at = [](Real t) { return scaled_path_field(1 + 0.4 * std::sin(3 * t)); };
  vp.dvel_dt = [](Real t, const Vec2& p) {
    TestField f = rigid_cutoff_field(Vec2(0.4, 0.9), -0.6, 0.55, 0.95);
    return Vec2(1.2 * std::cos(3 * t) * f.vel(p));
  };

  auto translation_traj = [&](int m) {
    Trajectory tr;
    tr.kinetic0 = 0;
    for (int k = 0; k < m; ++k) {
      NSState st(c.grid);
      st.t = 0.5 * k / (m - 1);
      st.w = mac_rigid(c.grid, c.ell0, 0);
      st.body.ell = c.ell0;
      tr.states.push_back(st);
      tr.rows.push_back({});
    }
    return tr;
  };

  // all-zero data: every term evaluates to exactly zero
  Trajectory z = translation_traj(5);
  for (auto& st : z.states) {
    st.w.setZero();
    st.body.ell.setZero();
  }
  CHECK(weak_residual(s, z, vp, ViscousPairing::deform) == 0);

  // uniform translation is an exact free-space solution; the residual is
  // pure trapezoid error in time, second order in the sample count
  Real r9 = weak_residual(s, translation_traj(9), vp, ViscousPairing::deform);
  Real r33 = weak_residual(s, translation_traj(33), vp, ViscousPairing::deform);
  CHECK(std::abs(r33) < 2e-6);
  CHECK(r9 / r33 == doctest::Approx(16).epsilon(0.05));

  Trajectory one = translation_traj(2);
  one.states.pop_back();
  one.rows.pop_back();
  CHECK_THROWS_AS(weak_residual(s, one, vp, ViscousPairing::deform), std::invalid_argument);
}

TEST_CASE("weak residual of computed trajectories shrinks under refinement") {
  auto run = [](int n) {
    NSConfig c;
    c.grid = Grid(n, 2.0);
    c.body = BodyGeometry::disk(0.5, 2.0);
    c.nu = 0.02;
    c.T = 0.25;
    c.dt_max = 0.01 * 32 / n;
    c.sample_stride = 1;
    c.ell0 = Vec2(1, 0);
    const Real a = 0.5;
    c.initial_velocity = [a](Real x, Real y) -> Vec2 {
      Real r2 = x * x + y * y;
      if (r2 < a * a) return Vec2(1, 0);
      Real c2 = a * a / (r2 * r2);
      return Vec2(c2 * (x * x - y * y), c2 * 2 * x * y);
    };
    NSSolver s(c);
    return std::pair<NSConfig, Trajectory>(c, s.run());
  };
  TestFieldPath vp;
  vp.at = [](Real t) {
    TestField f = bump_field(Vec2(-1.15, 0.3), 0.2, 1.0, -0.2, 0.4);
    Real T = 1 + 0.3 * std::sin(2 * t);
    auto vel = f.vel;
    auto jac = f.jac;
    f.vel = [=](const Vec2& p) -> Vec2 { return T * vel(p); };
    f.jac = [=](const Vec2& p) -> Mat2 { return T * jac(p); };
    return f;
  };
  vp.dvel_dt = [](Real t, const Vec2& p) {
    TestField f = bump_field(Vec2(-1.15, 0.3), 0.2, 1.0, -0.2, 0.4);
    return Vec2(0.6 * std::cos(2 * t) * f.vel(p));
  };

  auto [c32, t32] = run(32);
  auto [c64, t64] = run(64);
  NSSolver s32(c32), s64(c64);
  Real worst64 = 0;
  for (auto kind : {ViscousPairing::deform, ViscousPairing::curl, ViscousPairing::grad}) {
    Real r32 = weak_residual(s32, t32, vp, kind);
    Real r64 = weak_residual(s64, t64, vp, kind);
    CHECK(std::abs(r64) < 5e-3);
    CHECK(std::log2(std::abs(r32) / std::abs(r64)) >= 1.0);
    worst64 = std::max(worst64, std::abs(r64));
  }
  CHECK(worst64 > 0);  // the pairing is not vacuously zero
}
