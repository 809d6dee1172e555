#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

/// @file test_diagnostics.cpp
/// @brief Post-processing layer: strip dissipation ledgers against closed
///        forms, the combined-metric energy distance and weak pairing gaps,
///        localized rigid extensions, the five remainder functionals with
///        their redundant cross-evaluations, the Hardy quotient, and sweep
///        report assembly with CSV/JSON emission.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "kfsi/diagnostics.hpp"
#include "kfsi/euler_reference.hpp"

using namespace kfsi;

namespace {

const BodyGeometry kUnitDisk = BodyGeometry::disk(1.0, 2.0);

// Divergence-free perturbation that vanishes linearly at the interface and
// identically before the box walls: the discrete curl of p(d) q(d) s(x)
// with p = d^2 exp(-2d), q a quintic cutoff supported on d < 0.8, and a
// gentle spatial modulation s.  Impermeable at the body, silent at the
// walls, so every quadrature it feeds is free of ghost-closure artifacts.
MacVel pert_field(const Grid& g, const BodyGeometry& body) {
  Eigen::ArrayXXd phi = Eigen::ArrayXXd::Zero(g.n + 1, g.n + 1);
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Vec2 x(g.xf(i), g.yf(j));
      Real d = body.signed_distance(x);
      if (d > 0 && d < 0.8) {
        Real t = (d - 0.3) / 0.5;
        Real q = t <= 0 ? 1.0 : 1 - t * t * t * (10 - 15 * t + 6 * t * t);
        phi(i, j) = d * d * std::exp(-2 * d) * q * (1 + 0.3 * x.x() + 0.2 * x.y());
      }
    }
  return detail::node_curl(g, phi);
}

// Strip corrector built from the falling-disk exterior solution frozen at
// one instant; the standard slip-compatible data source.
Corrector falling_corrector(const Grid& g, Real c, Real nu, Real t) {
  PotentialFlowConfig pc;
  pc.body = kUnitDisk;
  pc.gravity = Vec2(0, -9.8);
  PotentialDiskFlow pf(pc);
  BodyState b = pf.body_state(t);
  auto rel = [pf, b, t](const Vec2& x) -> Vec2 {
    return pf.velocity(t, x) - b.solid_velocity_at(x);
  };
  StreamField s = build_stream_tensor(g, pc.body, rel, c * nu + 5 * g.h);
  return build_corrector(g, pc.body, s, c, nu);
}

// Hand-built trajectory holding the same face field and body velocity at
// every listed time.
Trajectory uniform_trajectory(const Grid& g, const std::vector<Real>& times, const MacVel& w,
                              const Vec2& ell, Real r) {
  Trajectory tr;
  for (Real t : times) {
    NSState s(g);
    s.t = t;
    s.w = w;
    s.body.ell = ell;
    s.body.r = r;
    tr.states.push_back(std::move(s));
  }
  return tr;
}

}  // namespace

// =========================================================================
// Strip dissipation ledgers
// =========================================================================

TEST_CASE("strip ledgers recomputed from samples match closed forms") {
  Grid g(128, 2.0);
  StripSpec spec{25.0, 8e-3};  // width 0.2 = 6.4 cells
  StripMask mask = strip_mask(g, kUnitDisk, spec);
  REQUIRE(mask.cells > 0);
  REQUIRE_FALSE(mask.under_resolved);
  const Real area = mask.cells * g.h * g.h;
  const Real T = 2.0;
  // Uneven sample spacing: a constant-rate trapezoid must still integrate
  // to rate * T.
  const std::vector<Real> times{0.0, 0.8, 2.0};

  SUBCASE("a resting fluid dissipates nothing") {
    Trajectory tr = uniform_trajectory(g, times, MacVel(g), Vec2::Zero(), 0.0);
    CHECK(strip_dissipation(tr, g, kUnitDisk, spec, StripKind::deform) == 0.0);
    CHECK(strip_dissipation(tr, g, kUnitDisk, spec, StripKind::curl) == 0.0);
    CHECK(strip_dissipation(tr, g, kUnitDisk, spec, StripKind::grad) == 0.0);
  }

  SUBCASE("a rigid rotation deforms nothing but carries curl 2 r^2") {
    const Vec2 ell(0.3, 0.1);
    const Real r = 0.7;
    Trajectory tr = uniform_trajectory(g, times, mac_rigid(g, ell, r), ell, r);
    Real dd = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::deform);
    Real dc = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::curl);
    Real dg = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::grad);
    CHECK(dd <= 1e-28);  // squared round-off of the cancelling corner stencils
    CHECK(dc == doctest::Approx(spec.nu * T * area * 2 * r * r).epsilon(1e-12));
    CHECK(dg == doctest::Approx(dc).epsilon(1e-12));
  }

  SUBCASE("a plane shear splits evenly between deformation and curl") {
    MacVel w(g);
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i <= g.n; ++i) w.u(i, j) = g.yc(j);
    Trajectory tr = uniform_trajectory(g, times, w, Vec2::Zero(), 0.0);
    Real dd = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::deform);
    Real dc = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::curl);
    Real dg = strip_dissipation(tr, g, kUnitDisk, spec, StripKind::grad);
    CHECK(dd == doctest::Approx(spec.nu * T * area * 0.5).epsilon(1e-12));
    CHECK(dg == doctest::Approx(spec.nu * T * area * 1.0).epsilon(1e-12));
    CHECK(dg == doctest::Approx(dd + dc).epsilon(1e-12));
  }

  SUBCASE("fewer than two samples integrates to zero") {
    Trajectory tr = uniform_trajectory(g, {0.0}, mac_rigid(g, Vec2(1, 0), 0.5), Vec2(1, 0), 0.5);
    CHECK(strip_dissipation(tr, g, kUnitDisk, spec, StripKind::grad) == 0.0);
  }

  SUBCASE("a strip thinner than two cells is rejected") {
    Trajectory tr = uniform_trajectory(g, times, MacVel(g), Vec2::Zero(), 0.0);
    CHECK_THROWS_WITH_AS(
        strip_dissipation(tr, g, kUnitDisk, StripSpec{25.0, 1e-3}, StripKind::grad),
        "strip_dissipation: strip narrower than two cells on this grid", std::invalid_argument);
  }
}

// =========================================================================
// Energy distance
// =========================================================================

TEST_CASE("energy distance weighs body velocity with the analytic mass") {
  Grid g(96, 2.0);
  HMetric metric(g, kUnitDisk);
  const Vec2 ell0(0.1, 0.0);
  MacVel w = mac_rigid(g, ell0, 0.0);

  Trajectory base = uniform_trajectory(g, {0.0, 1.0, 2.0}, w, ell0, 0.0);

  SUBCASE("identical trajectories are at distance zero, uninterpolated") {
    EnergyDistance d = energy_distance(base, trajectory_interpolant(base), metric);
    CHECK(d.sup == 0.0);
    CHECK_FALSE(d.interpolated);
    REQUIRE(d.values.size() == 3);
    for (Real v : d.values) CHECK(v == 0.0);
  }

  SUBCASE("a pure body-velocity offset measures sqrt(m |dl|^2 + J r^2)") {
    const Vec2 dl(0.2, -0.1);
    const Real dr = 0.3;
    Trajectory other = uniform_trajectory(g, {0.0, 1.0, 2.0}, w, ell0 + dl, dr);
    EnergyDistance d = energy_distance(other, trajectory_interpolant(base), metric);
    // Disk of radius 1, density 2: mass 2 pi, inertia about the origin pi.
    Real expected = std::sqrt(2 * kPi * dl.squaredNorm() + kPi * dr * dr);
    CHECK(d.sup == doctest::Approx(expected).epsilon(1e-12));
    CHECK(d.values.front() == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("time interpolation of the reference is linear and flagged") {
    MacVel two(g);
    two.u.setConstant(2.0);
    two.v.setConstant(0.0);
    Trajectory ref;
    {
      NSState a(g);
      a.t = 0.0;
      NSState b(g);
      b.t = 2.0;
      b.w = two;
      ref.states.push_back(std::move(a));
      ref.states.push_back(std::move(b));
    }
    MacVel half(g);
    half.u.setConstant(0.5);
    Trajectory probe = uniform_trajectory(g, {0.5}, half, Vec2::Zero(), 0.0);
    EnergyDistance d = energy_distance(probe, trajectory_interpolant(ref), metric);
    CHECK(d.interpolated);
    CHECK(d.sup == 0.0);  // the linear interpolant reproduces u = t/4 exactly
  }

  SUBCASE("sample times outside the reference window are rejected") {
    Trajectory late = uniform_trajectory(g, {3.0}, w, ell0, 0.0);
    CHECK_THROWS_WITH_AS(energy_distance(late, trajectory_interpolant(base), metric),
                         "reference trajectory does not cover the requested time",
                         std::invalid_argument);
  }
}

// =========================================================================
// Pairing dictionary and weak gaps
// =========================================================================

TEST_CASE("pairing dictionary is divergence free, localized, and normed") {
  Grid g(160, 2.0);
  HMetric metric(g, kUnitDisk);
  auto dict = weak_dictionary(g, kUnitDisk, metric);
  REQUIRE(dict.size() == 14);
  CHECK(dict[0].name == "blob_r0_b0");
  CHECK(dict[12].name == "near_body_translation");
  CHECK(dict[13].name == "near_body_rotation");

  SUBCASE("every entry is an exact discrete curl with a healthy norm") {
    for (const auto& tf : dict) {
      ScalarField dv = mac_divergence(g, tf.f.w);
      CHECK(dv.data().abs().maxCoeff() <= 1e-12);
      CHECK(tf.h_norm > 0.15);
    }
  }

  SUBCASE("vortex blobs stay clear of the body") {
    for (const auto& tf : dict) {
      if (tf.name.rfind("blob", 0) != 0) continue;
      for (int j = 0; j < g.n; ++j)
        for (int i = 0; i <= g.n; ++i)
          if (kUnitDisk.signed_distance(Vec2(g.xf(i), g.yc(j))) < 0.05)
            CHECK(tf.f.w.u(i, j) == 0.0);
    }
  }

  SUBCASE("the rigid entries carry the body part of the metric") {
    CHECK(dict[12].f.ell == Vec2(1, 0));
    CHECK(dict[12].f.r == 0.0);
    CHECK(dict[13].f.ell == Vec2(0, 0));
    CHECK(dict[13].f.r == 1.0);
  }

  SUBCASE("a body filling the box leaves no room for test fields") {
    Grid tiny(16, 1.0);
    BodyGeometry fat = BodyGeometry::disk(0.9, 2.0);
    HMetric m2(tiny, fat);
    CHECK_THROWS_WITH_AS(weak_dictionary(tiny, fat, m2), "weak_dictionary: body fills the box",
                         std::invalid_argument);
  }
}

TEST_CASE("weak gaps vanish on equality and obey Cauchy-Schwarz exactly") {
  Grid g(160, 2.0);
  HMetric metric(g, kUnitDisk);
  auto dict = weak_dictionary(g, kUnitDisk, metric);

  MacVel pert = pert_field(g, kUnitDisk);
  Trajectory a = uniform_trajectory(g, {0.0, 1.0}, pert, Vec2(0.3, -0.2), 0.5);
  Trajectory zero = uniform_trajectory(g, {0.0, 1.0}, MacVel(g), Vec2::Zero(), 0.0);

  WeakGaps same = weak_gap(a, trajectory_interpolant(a), metric, dict);
  CHECK(same.max_gap == 0.0);
  CHECK_FALSE(same.interpolated);

  WeakGaps gaps = weak_gap(a, trajectory_interpolant(zero), metric, dict);
  EnergyDistance dist = energy_distance(a, trajectory_interpolant(zero), metric);
  CHECK(gaps.max_gap > 0.0);
  REQUIRE(gaps.gaps.rows() == 2);
  REQUIRE(gaps.gaps.cols() == 14);
  for (int s = 0; s < gaps.gaps.rows(); ++s)
    for (int k = 0; k < gaps.gaps.cols(); ++k)
      CHECK(gaps.gaps(s, k) <=
            dist.values[static_cast<size_t>(s)] * dict[static_cast<size_t>(k)].h_norm *
                    (1 + 1e-12) +
                1e-15);
}

// =========================================================================
// Localized rigid extensions
// =========================================================================

TEST_CASE("rigid extension is exact inside its plateau and silent outside") {
  Grid g(320, 2.0);
  const Vec2 ell(0.4, -0.7);
  const Real r = 0.6;
  MacVel rig = mac_rigid(g, ell, r);

  SUBCASE("a plateau covering the box reproduces the rigid field everywhere") {
    RigidExtension ext = build_rigid_extension(g, kUnitDisk, ell, r, 25.0);
    CHECK((ext.u.u - rig.u).abs().maxCoeff() <= 1e-12);
    CHECK((ext.u.v - rig.v).abs().maxCoeff() <= 1e-12);
    CHECK(ext.inner_width == 25.0);
  }

  SUBCASE("a local plateau is rigid inside, zero past twice the width") {
    const Real w = 0.21;
    RigidExtension ext = build_rigid_extension(g, kUnitDisk, ell, r, w);
    Real inner = 0, outer = 0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i <= g.n; ++i) {
        Real d0 = kUnitDisk.signed_distance(Vec2(g.xf(i), g.yf(j)));
        Real d1 = kUnitDisk.signed_distance(Vec2(g.xf(i), g.yf(j + 1)));
        if (std::max(d0, d1) < w) inner = std::max(inner, std::abs(ext.u.u(i, j) - rig.u(i, j)));
        if (std::min(d0, d1) > 2 * w + 0.01) outer = std::max(outer, std::abs(ext.u.u(i, j)));
      }
    CHECK(inner <= 1e-12);
    CHECK(outer == 0.0);
    ScalarField dv = mac_divergence(g, ext.u);
    CHECK(dv.data().abs().maxCoeff() <= 1e-12);
  }

  SUBCASE("a nonpositive width is rejected") {
    CHECK_THROWS_AS(build_rigid_extension(g, kUnitDisk, ell, r, 0.0), std::invalid_argument);
  }
}

// =========================================================================
// Remainder functionals
// =========================================================================

TEST_CASE("remainder functionals vanish exactly when their ingredients do") {
  Grid g(320, 2.0);
  const Real nu = 8e-3, c = 25;
  RigidExtension ext = build_rigid_extension(g, kUnitDisk, Vec2(0.3, -0.2), 0.5, c);
  NSState s(g);
  s.body.ell = Vec2(0.3, -0.2);
  s.body.r = 0.5;

  SUBCASE("a zero strip field kills every strip functional, not the third") {
    StreamField zs =
        build_stream_tensor(g, kUnitDisk, [](const Vec2&) { return Vec2(0, 0); }, c * nu + 5 * g.h);
    Corrector zco = build_corrector(g, kUnitDisk, zs, c, nu);
    MacVel pert = pert_field(g, kUnitDisk);
    s.w.u = ext.u.u + pert.u;
    s.w.v = ext.u.v + pert.v;
    Remainders r = remainders(g, s, s.w, zco, ext, kUnitDisk, nu);
    CHECK(r.r1 == 0.0);
    CHECK(r.r2 == 0.0);
    CHECK(r.r4 == 0.0);
    CHECK(r.r5 == 0.0);
    CHECK(r.r1_dual == 0.0);
    CHECK(r.r3 > 0.2);  // 2 nu |D|^2 of the field itself
    CHECK(r.r3 < 0.25);
    CHECK(std::abs(r.r3 - r.r3_alt) <= 1e-13);
  }

  SUBCASE("a rigid flow leaves only the rotation coupling") {
    Corrector co = falling_corrector(g, c, nu, 0.3);
    s.w = ext.u;
    Remainders r = remainders(g, s, s.w, co, ext, kUnitDisk, nu);
    CHECK(std::abs(r.r1) <= 1e-20);
    CHECK(std::abs(r.r1_dual) <= 1e-20);
    CHECK(std::abs(r.r2) <= 1e-12);
    CHECK(std::abs(r.r4) <= 1e-12);
    CHECK(std::abs(r.r5) > 1e-3);  // r != 0 couples the strip field to u
  }

  SUBCASE("mismatched ingredients are rejected") {
    Corrector co = falling_corrector(g, c, nu, 0.3);
    s.w = ext.u;
    Grid g2(160, 2.0);
    Corrector co2 = falling_corrector(g2, c, nu, 0.3);
    CHECK_THROWS_AS(remainders(g, s, s.w, co2, ext, kUnitDisk, nu), std::invalid_argument);
    CHECK_THROWS_AS(remainders(g, s, s.w, co, ext, kUnitDisk, 4e-3), std::invalid_argument);
    RigidExtension thin = build_rigid_extension(g, kUnitDisk, s.body.ell, s.body.r, 0.1);
    CHECK_THROWS_WITH_AS(remainders(g, s, s.w, co, thin, kUnitDisk, nu),
                         "remainders: rigid extension narrower than the strip",
                         std::invalid_argument);
  }
}

TEST_CASE("dual evaluation of the first functional converges to the direct one") {
  const Real nu = 8e-3, c = 25;
  std::vector<Real> relgap, r2s, r3s, r5s;
  for (int n : {160, 320, 640}) {
    Grid g(n, 2.0);
    Corrector co = falling_corrector(g, c, nu, 0.3);
    RigidExtension ext = build_rigid_extension(g, kUnitDisk, Vec2(0.3, -0.2), 0.5, c);
    NSState s(g);
    s.body.ell = Vec2(0.3, -0.2);
    s.body.r = 0.5;
    MacVel pert = pert_field(g, kUnitDisk);
    s.w.u = ext.u.u + pert.u;
    s.w.v = ext.u.v + pert.v;
    Remainders r = remainders(g, s, s.w, co, ext, kUnitDisk, nu);
    relgap.push_back(std::abs(r.r1 - r.r1_dual) / std::abs(r.r1));
    r2s.push_back(std::abs(r.r2));
    r3s.push_back(r.r3);
    r5s.push_back(std::abs(r.r5));
    CHECK(std::abs(r.r3 - r.r3_alt) <= 1e-13 * std::max(Real(1), std::abs(r.r3)));
  }
  // Direct and distance-weighted evaluations approach each other at first
  // order as the interface layer resolves.
  CHECK(relgap[0] <= 0.30);
  CHECK(relgap[1] <= 0.17);
  CHECK(relgap[2] <= 0.10);
  CHECK(relgap[1] < relgap[0]);
  CHECK(relgap[2] < relgap[1]);
  CHECK(relgap[0] / relgap[2] >= 2.5);
  // The advective strip functionals of this field shrink at first order...
  CHECK(r2s[1] < 0.62 * r2s[0]);
  CHECK(r2s[2] < 0.62 * r2s[1]);
  CHECK(r5s[1] < 0.65 * r5s[0]);
  CHECK(r5s[2] < 0.65 * r5s[1]);
  // ...while the full-domain deformation pairing settles to a fixed value.
  CHECK(std::abs(r3s[2] - r3s[1]) < 0.6 * std::abs(r3s[1] - r3s[0]));
}

TEST_CASE("remainder series applies the trapezoid rule sample by sample") {
  Grid g(160, 2.0);
  const Real nu = 8e-3, c = 25;
  RigidExtension ext = build_rigid_extension(g, kUnitDisk, Vec2(0.3, -0.2), 0.5, c);
  MacVel pert = pert_field(g, kUnitDisk);
  MacVel w(g);
  w.u = ext.u.u + pert.u;
  w.v = ext.u.v + pert.v;
  Trajectory tr = uniform_trajectory(g, {0.0, 0.4, 1.0}, w, Vec2(0.3, -0.2), 0.5);

  ReferenceAt fixed_ref = [&](Real, MacVel& out, BodyState& b) {
    out = w;
    b = tr.states[0].body;
    return true;
  };
  auto co_at = [&](Real) { return falling_corrector(g, c, nu, 0.3); };
  RemainderSeries series = remainder_series(tr, g, kUnitDisk, nu, c, fixed_ref, co_at);

  Corrector co = falling_corrector(g, c, nu, 0.3);
  Remainders direct = remainders(g, tr.states[0], w, co, ext, kUnitDisk, nu);

  REQUIRE(series.times.size() == 3);
  CHECK_FALSE(series.interpolated);
  for (const Remainders& r : series.at) {
    CHECK(r.r1 == direct.r1);
    CHECK(r.r3 == direct.r3);
    CHECK(r.r5 == direct.r5);
  }
  // Constant samples over [0, 1]: each integral equals its sample value.
  CHECK(series.integrals[0] == doctest::Approx(direct.r1).epsilon(1e-12));
  CHECK(series.integrals[1] == doctest::Approx(direct.r2).epsilon(1e-12));
  CHECK(series.integrals[2] == doctest::Approx(direct.r3).epsilon(1e-12));
  CHECK(series.integrals[4] == doctest::Approx(direct.r5).epsilon(1e-12));
  CHECK(series.dual_gap_rel ==
        doctest::Approx(std::abs(direct.r1 - direct.r1_dual) / std::abs(direct.r1))
            .epsilon(1e-12));
  CHECK(series.r3_pair_gap <= 1e-13);
}

// =========================================================================
// Hardy quotient
// =========================================================================

TEST_CASE("hardy quotient is scale-stable on strip data and guarded at zero") {
  StripSpec sp{25.0, 8e-3};
  std::vector<Real> ratio;
  for (int n : {160, 320, 640}) {
    Grid g(n, 2.0);
    RigidExtension ext = build_rigid_extension(g, kUnitDisk, Vec2(0.3, -0.2), 0.5, 25.0);
    NSState s(g);
    s.body.ell = Vec2(0.3, -0.2);
    s.body.r = 0.5;
    s.w = ext.u;
    CHECK(hardy_ratio(g, s, kUnitDisk, ext, sp) == 0.0);  // zero gradient: guard
    MacVel pert = pert_field(g, kUnitDisk);
    s.w.u += pert.u;
    s.w.v += pert.v;
    ratio.push_back(hardy_ratio(g, s, kUnitDisk, ext, sp));
  }
  for (Real r : ratio) {
    CHECK(r > 0.30);
    CHECK(r < 0.45);
  }
  // The quotient settles under refinement instead of drifting.
  CHECK(std::abs(ratio[2] - ratio[1]) < std::abs(ratio[1] - ratio[0]));
}

// =========================================================================
// Sweep report
// =========================================================================

namespace {

std::vector<SweepRow> synthetic_rows() {
  std::vector<SweepRow> rows;
  for (Real nu : {8e-3, 4e-3, 2e-3, 1e-3}) {
    SweepRow r;
    r.nu = nu;
    r.strip_deform = 2 * nu;
    r.strip_curl = 3 * std::sqrt(nu);
    r.strip_grad = r.strip_deform + r.strip_curl;
    r.total_deform = 5 * std::sqrt(nu);
    r.energy_distance = std::sqrt(nu);
    r.weak_gap_max = 0.1 * std::sqrt(nu);
    for (int q = 0; q < 5; ++q) r.r_integrals[static_cast<size_t>(q)] = (q % 2 ? -1 : 1) * nu;
    r.hardy_max = 2.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("sweep report fits exponents and rank correlations") {
  DiagnosticsReport rep = convergence_report(synthetic_rows());
  CHECK(rep.exponents.strip_deform == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.exponents.strip_curl == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.exponents.total_deform == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.exponents.energy_distance == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.exponents.weak_gap_max == doctest::Approx(0.5).epsilon(1e-9));
  for (int q = 0; q < 5; ++q)
    CHECK(rep.exponents.r_abs[static_cast<size_t>(q)] == doctest::Approx(1.0).epsilon(1e-9));
  // Every tracked quantity decreases with nu, so all ranks agree.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) CHECK(rep.spearman(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.necessity_ok);
}

TEST_CASE("necessity flag trips when distance falls but dissipation does not") {
  auto rows = synthetic_rows();
  for (auto& r : rows) r.total_deform = 5.0;  // frozen ledger, falling distance
  DiagnosticsReport rep = convergence_report(rows);
  CHECK_FALSE(rep.necessity_ok);

  // A non-decreasing distance asserts nothing about the ledger.
  for (auto& r : rows) r.energy_distance = 1.0;
  rep = convergence_report(rows);
  CHECK(rep.necessity_ok);
}

TEST_CASE("sweep report rejects malformed tables") {
  auto rows = synthetic_rows();

  auto three = rows;
  three.pop_back();
  CHECK_THROWS_WITH_AS(convergence_report(three),
                       "convergence_report: need at least four viscosities; no extrapolation "
                       "from fewer",
                       std::invalid_argument);

  auto unordered = rows;
  unordered[2].nu = unordered[1].nu;
  CHECK_THROWS_AS(convergence_report(unordered), std::invalid_argument);

  auto negative = rows;
  negative[1].strip_curl = -1e-9;
  CHECK_THROWS_AS(convergence_report(negative), std::invalid_argument);
}

TEST_CASE("report emitters produce a fixed CSV header and parsable JSON") {
  DiagnosticsReport rep = convergence_report(synthetic_rows());

  std::string csv = report_csv(rep);
  const std::string header =
      "nu,strip_deform,strip_curl,strip_grad,total_deform,energy_distance,weak_gap_max,"
      "R1_integral,R2_integral,R3_integral,R4_integral,R5_integral,hardy_max\n";
  CHECK(csv.compare(0, header.size(), header) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  nlohmann::json j = nlohmann::json::parse(report_json(rep));
  REQUIRE(j["rows"].size() == 4);
  CHECK(j["rows"][0]["nu"].get<double>() == doctest::Approx(8e-3).epsilon(1e-15));
  CHECK(j["exponents"]["strip_deform"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j["spearman"]["matrix"][0][3].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["necessity_ok"].get<bool>());
  CHECK(j["rows"][0]["R_integrals"].size() == 5);
}
