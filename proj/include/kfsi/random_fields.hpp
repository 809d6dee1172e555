#pragma once

/// @file random_fields.hpp
/// @brief Seeded generators of admissible analytic test fields: Gaussian
///        stream bumps kept clear of the solid and the box frame, windowed
///        trigonometric streams for volume identities, and no-slip fields
///        vanishing on the body boundary.

#include <random>

#include "kfsi/forms.hpp"

namespace kfsi::testfields {

/// Bump stream placed in the annulus between the disk and the box frame so
/// that every field of a triple is negligible on both; safe for comparing
/// staircase-masked quadrature against dense full-box quadrature.  Passing a
/// finite angle confines the center near it so that several bumps overlap.
inline TestField annulus_bump(std::mt19937& rng,
                              Real angle = std::numeric_limits<Real>::quiet_NaN()) {
  std::uniform_real_distribution<Real> ur(0, 1);
  Real rad = 1.22 + 0.06 * ur(rng);
  Real ang = std::isnan(angle) ? 2 * kPi * ur(rng) : angle + 0.2 * (ur(rng) - 0.5);
  Real s = 0.14 + 0.01 * ur(rng);
  Real a0 = 2 * ur(rng) - 1, a1 = ur(rng) - 0.5, a2 = ur(rng) - 0.5;
  return bump_field(Vec2(rad * std::cos(ang), rad * std::sin(ang)), s, a0, a1, a2);
}

/// Element of the combined fluid/body test space: a rigid motion shut off
/// smoothly outside the solid plus one or two exterior bumps.
inline TestField combined_field(std::mt19937& rng) {
  std::uniform_real_distribution<Real> ur(0, 1);
  TestField f = rigid_cutoff_field(Vec2(2 * ur(rng) - 1, 2 * ur(rng) - 1), 2 * ur(rng) - 1,
                                   0.55, 0.95);
  f = f + annulus_bump(rng);
  if (ur(rng) < 0.5) f = f + annulus_bump(rng);
  return f;
}

/// Separable stream  sum_k f_k(x) g_k(y)  with a squared-sine window that
/// shuts the field and its gradient off at the box frame; analytic first and
/// second derivatives.  Used for the volume identity suite.
inline TestField windowed_trig_field(std::mt19937& rng, Real L = 2.0) {
  struct Term {
    Real c, mx, my, phx, phy;
  };
  std::uniform_real_distribution<Real> ur(0, 1);
  std::vector<Term> terms(2);
  for (auto& t : terms) {
    t.c = 2 * ur(rng) - 1;
    t.mx = 1 + std::floor(2 * ur(rng));
    t.my = 1 + std::floor(2 * ur(rng));
    t.phx = 2 * kPi * ur(rng);
    t.phy = 2 * kPi * ur(rng);
  }
  const Real kw = kPi / (2 * L);
  auto axis = [kw, L](Real x, Real m, Real ph, Real& f, Real& f1, Real& f2) {
    Real sw = std::sin(kw * (x + L)), cw = std::cos(kw * (x + L));
    Real A = sw * sw, A1 = 2 * kw * sw * cw, A2 = 2 * kw * kw * (cw * cw - sw * sw);
    Real km = kPi * m / 2;
    Real C = std::cos(km * x + ph), C1 = -km * std::sin(km * x + ph), C2 = -km * km * C;
    f = A * C;
    f1 = A1 * C + A * C1;
    f2 = A2 * C + 2 * A1 * C1 + A * C2;
  };
  auto parts = [axis, terms](const Vec2& p, Real& px, Real& py, Real& pxx, Real& pxy, Real& pyy) {
    px = py = pxx = pxy = pyy = 0;
    for (const auto& t : terms) {
      Real f, f1, f2, g, g1, g2;
      axis(p.x(), t.mx, t.phx, f, f1, f2);
      axis(p.y(), t.my, t.phy, g, g1, g2);
      px += t.c * f1 * g;
      py += t.c * f * g1;
      pxx += t.c * f2 * g;
      pxy += t.c * f1 * g1;
      pyy += t.c * f * g2;
    }
  };
  TestField out;
  out.vel = [parts](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    parts(p, px, py, pxx, pxy, pyy);
    return Vec2(py, -px);
  };
  out.jac = [parts](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    parts(p, px, py, pxx, pxy, pyy);
    Mat2 j;
    j << pxy, pyy, -pxx, -pxy;
    return j;
  };
  out.support_radius = std::sqrt(Real(2)) * L;
  return out;
}

/// Gradient of a windowed scalar: curl-free, not divergence-free.  Exercises
/// hypothesis rejection and the curl-free branch of the div/rot identity.
inline TestField gradient_field(std::mt19937& rng, Real L = 2.0) {
  TestField s = windowed_trig_field(rng, L);  // reuse its stream as potential
  TestField out;
  auto vel = s.vel;
  auto jac = s.jac;
  out.vel = [vel](const Vec2& p) {
    Vec2 u = vel(p);
    return Vec2(-u.y(), u.x());  // perp of perp-gradient = gradient
  };
  out.jac = [jac](const Vec2& p) {
    Mat2 j = jac(p);
    Mat2 o;
    o << -j(1, 0), -j(1, 1), j(0, 0), j(0, 1);
    return o;
  };
  out.support_radius = s.support_radius;
  return out;
}

/// Stream  (|x|^2 - a^2)^2 (c0 + c1 x + c2 y) exp(-|x|^2 / 2 sigma^2):
/// velocity and gradient vanish on the circle |x| = a, so the induced field
/// satisfies the no-slip hypothesis of the boundary moment identity.
inline TestField noslip_field(std::mt19937& rng, Real a) {
  std::uniform_real_distribution<Real> ur(0, 1);
  Real c0 = 2 * ur(rng) - 1, c1 = 2 * ur(rng) - 1, c2 = 2 * ur(rng) - 1;
  const Real sig = 0.45, is2 = 1 / (sig * sig);
  auto parts = [=](const Vec2& p, Real& px, Real& py, Real& pxx, Real& pxy, Real& pyy) {
    Real x = p.x(), y = p.y(), t = x * x + y * y;
    Real F = (t - a * a) * (t - a * a), F1 = 2 * (t - a * a), F2 = 2;
    Real E = std::exp(-Real(0.5) * t * is2);
    Real Ex = -x * is2 * E, Ey = -y * is2 * E;
    Real Exx = (-is2 + x * x * is2 * is2) * E, Eyy = (-is2 + y * y * is2 * is2) * E;
    Real Exy = x * y * is2 * is2 * E;
    Real P = c0 + c1 * x + c2 * y;
    Real M = E * P, Mx = Ex * P + E * c1, My = Ey * P + E * c2;
    Real Mxx = Exx * P + 2 * Ex * c1, Myy = Eyy * P + 2 * Ey * c2;
    Real Mxy = Exy * P + Ex * c2 + Ey * c1;
    px = 2 * x * F1 * M + F * Mx;
    py = 2 * y * F1 * M + F * My;
    pxx = 4 * x * x * F2 * M + 2 * F1 * M + 4 * x * F1 * Mx + F * Mxx;
    pyy = 4 * y * y * F2 * M + 2 * F1 * M + 4 * y * F1 * My + F * Myy;
    pxy = 4 * x * y * F2 * M + 2 * x * F1 * My + 2 * y * F1 * Mx + F * Mxy;
  };
  TestField out;
  out.vel = [parts](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    parts(p, px, py, pxx, pxy, pyy);
    return Vec2(py, -px);
  };
  out.jac = [parts](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    parts(p, px, py, pxx, pxy, pyy);
    Mat2 j;
    j << pxy, pyy, -pxx, -pxy;
    return j;
  };
  out.support_radius = 4 * sig + a;
  return out;
}

}  // namespace kfsi::testfields
