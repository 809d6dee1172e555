#pragma once

/// @file forms.hpp
/// @brief Weak-formulation algebra for the coupled fluid/body system: the
///        convective trilinear form, the gravity functional, time-integrated
///        weak residuals against analytic test fields, and a suite of
///        integration-by-parts identities evaluated with discrete calculus.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "kfsi/ns_solver.hpp"

namespace kfsi {

// ============================================================================
// Analytic test fields
// ============================================================================

/// Divergence-free test field given by callables (value and Jacobian), with
/// the rigid part it carries on the solid.  jac(i,j) = d vel_i / d x_j.
struct TestField {
  std::function<Vec2(const Vec2&)> vel;
  std::function<Mat2(const Vec2&)> jac;
  Vec2 ell = Vec2::Zero();
  Real r = 0;
  Real support_radius = std::numeric_limits<Real>::infinity();

  Vec2 rigid_at(const Vec2& x) const { return ell + r * perp(x); }
};

/// Stream function psi = (a0 + a1 xi + a2 eta) exp(-|xi,eta|^2 / 2 s^2),
/// xi = x - cx, eta = y - cy; the induced velocity is the perpendicular
/// gradient (d psi/dy, -d psi/dx), divergence-free by construction and
/// rapidly decaying away from the center.
inline TestField bump_field(const Vec2& c, Real s, Real a0, Real a1, Real a2) {
  const Real is2 = 1 / (s * s), is4 = is2 * is2;
  auto psi_parts = [=](const Vec2& p, Real& px, Real& py, Real& pxx, Real& pxy, Real& pyy) {
    Real xi = p.x() - c.x(), eta = p.y() - c.y();
    Real G = std::exp(-Real(0.5) * (xi * xi + eta * eta) * is2);
    Real P = a0 + a1 * xi + a2 * eta;
    px = (a1 - P * xi * is2) * G;
    py = (a2 - P * eta * is2) * G;
    pxx = (-2 * a1 * xi * is2 - P * is2 + P * xi * xi * is4) * G;
    pyy = (-2 * a2 * eta * is2 - P * is2 + P * eta * eta * is4) * G;
    pxy = (-a1 * eta * is2 - a2 * xi * is2 + P * xi * eta * is4) * G;
  };
  TestField f;
  f.vel = [=](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    psi_parts(p, px, py, pxx, pxy, pyy);
    return Vec2(py, -px);
  };
  f.jac = [=](const Vec2& p) {
    Real px, py, pxx, pxy, pyy;
    psi_parts(p, px, py, pxx, pxy, pyy);
    Mat2 j;
    j << pxy, pyy, -pxx, -pxy;
    return j;
  };
  f.support_radius = c.norm() + 9 * s;  // tails below round-off beyond this
  return f;
}

/// Rigid motion (ell, r) inside radius R1, smoothly shut off to zero past R2
/// through a quintic step applied to the rigid stream function; exactly rigid
/// on the solid, compactly supported, divergence-free.
inline TestField rigid_cutoff_field(const Vec2& ell, Real r, Real R1, Real R2) {
  if (!(R2 > R1 && R1 > 0)) throw std::invalid_argument("rigid_cutoff_field: need 0 < R1 < R2");
  auto eta = [=](Real rho, Real& e, Real& e1, Real& e2) {
    Real t = (rho - R1) / (R2 - R1), iw = 1 / (R2 - R1);
    Real s = t * t * t * (10 + t * (-15 + 6 * t));
    Real s1 = 30 * t * t * (t - 1) * (t - 1);
    Real s2 = 60 * t * (2 * t - 1) * (t - 1);
    e = 1 - s;
    e1 = -s1 * iw;
    e2 = -s2 * iw * iw;
  };
  auto fill = [=](const Vec2& p, Vec2& u, Mat2& j) {
    Real rho = p.norm();
    if (rho <= R1) {
      u = ell + r * perp(p);
      j << 0, -r, r, 0;
      return;
    }
    if (rho >= R2) {
      u.setZero();
      j.setZero();
      return;
    }
    Real e, e1, e2;
    eta(rho, e, e1, e2);
    Real x = p.x(), y = p.y();
    Real S = ell.x() * y - ell.y() * x - Real(0.5) * r * rho * rho;
    Real Sx = -ell.y() - r * x, Sy = ell.x() - r * y;
    Real ex = e1 * x / rho, ey = e1 * y / rho;
    Real exx = e2 * x * x / (rho * rho) + e1 * (1 / rho - x * x / (rho * rho * rho));
    Real eyy = e2 * y * y / (rho * rho) + e1 * (1 / rho - y * y / (rho * rho * rho));
    Real exy = e2 * x * y / (rho * rho) - e1 * x * y / (rho * rho * rho);
    Real px = Sx * e + S * ex, py = Sy * e + S * ey;
    Real pxx = -r * e + 2 * Sx * ex + S * exx;
    Real pyy = -r * e + 2 * Sy * ey + S * eyy;
    Real pxy = Sx * ey + Sy * ex + S * exy;
    u = Vec2(py, -px);
    j << pxy, pyy, -pxx, -pxy;
  };
  TestField f;
  f.vel = [=](const Vec2& p) {
    Vec2 u;
    Mat2 j;
    fill(p, u, j);
    return u;
  };
  f.jac = [=](const Vec2& p) {
    Vec2 u;
    Mat2 j;
    fill(p, u, j);
    return j;
  };
  f.ell = ell;
  f.r = r;
  f.support_radius = R2;
  return f;
}

/// Pointwise sum of two test fields (rigid parts add as well).
inline TestField operator+(const TestField& a, const TestField& b) {
  TestField f;
  auto av = a.vel;
  auto bv = b.vel;
  auto aj = a.jac;
  auto bj = b.jac;
  f.vel = [=](const Vec2& p) -> Vec2 { return av(p) + bv(p); };
  f.jac = [=](const Vec2& p) -> Mat2 { return aj(p) + bj(p); };
  f.ell = a.ell + b.ell;
  f.r = a.r + b.r;
  f.support_radius = std::max(a.support_radius, b.support_radius);
  return f;
}

/// Weighted H1 seminorm (weight 1 + |x|^2) over the computational box;
/// membership in the test space requires it finite, which compact support
/// guarantees.
inline Real weighted_h1_seminorm(const Grid& g, const TestField& v) {
  Real s = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Vec2 p = g.center(i, j);
      s += v.jac(p).squaredNorm() * (1 + p.squaredNorm());
    }
  return std::sqrt(s * g.cell_area());
}

// ============================================================================
// Trilinear convective form and gravity functional
// ============================================================================

/// b(u,v,w) = m r_u (ell_v x ell_w)
///          + int_fluid [ ((u - u_S) . grad w) . v - r_u (v x w) ]
/// with the advective pairing in skew form, so exchanging v and w flips the
/// sign and b(u,v,v) vanishes identically, cell by cell.  The axial inertia
/// determinant of the 3D formula has three parallel arguments in the plane
/// and drops out.  u_S is the rigid extension of u's own (ell, r).
inline Real trilinear_b(const Grid& g, const TestField& u, const TestField& v,
                        const TestField& w, const BodyGeometry& geom) {
  if (!(w.support_radius < std::numeric_limits<Real>::infinity()))
    throw std::invalid_argument("trilinear_b: w must be compactly supported");
  Real acc = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Vec2 p = g.center(i, j);
      if (geom.signed_distance(p) <= 0) continue;
      Vec2 A = u.vel(p) - u.rigid_at(p);
      Vec2 vv = v.vel(p), vw = w.vel(p);
      Vec2 adw = w.jac(p) * A, adv = v.jac(p) * A;
      acc += Real(0.5) * (adw.dot(vv) - adv.dot(vw)) - u.r * cross2(vv, vw);
    }
  return geom.mass() * u.r * cross2(v.ell, w.ell) + acc * g.cell_area();
}

/// Gravity functional f[v] = m_a (Q^T g) . ell_v - Vol (Q^T g) . (r_v x0^perp):
/// net weight minus buoyancy on the translation slot, buoyancy torque about
/// the centroid on the rotation slot.  Closed form, no quadrature.
inline Real forcing_f(const Mat2& Q, const Vec2& g, const Vec2& ell_v, Real r_v,
                      const BodyGeometry& geom) {
  Vec2 gb = Q.transpose() * g;
  return geom.buoyant_mass() * gb.dot(ell_v) - geom.area() * gb.dot(r_v * perp(geom.centroid()));
}

// ============================================================================
// Weak residual of a computed trajectory
// ============================================================================

/// Time-dependent test field: spatial field at each time plus the time
/// derivative of its velocity callable.
struct TestFieldPath {
  std::function<TestField(Real)> at;
  std::function<Vec2(Real, const Vec2&)> dvel_dt;
};

enum class ViscousPairing { deform, curl, grad };

namespace detail {

/// Weighted face inner product of MAC data with an analytic field.
inline Real h_inner(const Grid& g, const FaceRho& rho, const MacVel& w,
                    const std::function<Vec2(const Vec2&)>& f) {
  Real s = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) s += rho.rx(i, j) * w.u(i, j) * f(Vec2(g.xf(i), g.yc(j))).x();
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) s += rho.ry(i, j) * w.v(i, j) * f(Vec2(g.xc(i), g.yf(j))).y();
  return s * g.cell_area();
}

/// Viscous pairing of a MAC field with an analytic test field, i.e. the
/// bilinear forms 2 int D:D, 2 int W:W, or int grad:grad, using the same
/// staggered quadrature as the solver's dissipation ledgers.
inline Real viscous_pair(const Grid& g, const MacVel& w, BoxBC bc, const TestField& v,
                         ViscousPairing kind) {
  MacDeform d = mac_deformation(g, w, bc);
  Real sym = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Mat2 jv = v.jac(g.center(i, j));
      sym += d.d11(i, j) * jv(0, 0) + d.d22(i, j) * jv(1, 1);
    }
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Mat2 jv = v.jac(Vec2(g.xf(i), g.yf(j)));
      sym += 2 * d.d12(i, j) * Real(0.5) * (jv(0, 1) + jv(1, 0));
    }
  Real two_dd = 2 * sym * g.cell_area();
  if (kind == ViscousPairing::deform) return two_dd;
  Eigen::ArrayXXd om = mac_vorticity(g, w, bc);
  Real ww = 0;
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Mat2 jv = v.jac(Vec2(g.xf(i), g.yf(j)));
      ww += om(i, j) * (jv(1, 0) - jv(0, 1));
    }
  Real two_ww = ww * g.cell_area();  // 2 int W(u):W(v) = int curl u curl v
  if (kind == ViscousPairing::curl) return two_ww;
  return Real(0.5) * (two_dd + two_ww);  // int grad u : grad v
}

/// b(u, u, v) with u given as MAC data carrying rigid part (ell, r): the
/// gradient of u is formed by centered differences of the cell-center
/// interpolant, the gradient of v analytically.  Null geometry means no
/// body: integrate everywhere with no rigid terms.
inline Real convective_pair(const Grid& g, const BodyGeometry* geom, const MacVel& w,
                            const Vec2& ell, Real r, const TestField& v) {
  VectorField uc = mac_to_center(g, w);
  const int n = g.n;
  const Real ih2 = 1 / (2 * g.h);
  auto duc = [&](int i, int j) -> Mat2 {
    int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
    int jl = std::max(j - 1, 0), jr = std::min(j + 1, n - 1);
    Real sx = (i > 0 && i < n - 1) ? ih2 : 2 * ih2;
    Real sy = (j > 0 && j < n - 1) ? ih2 : 2 * ih2;
    Mat2 m;
    m.col(0) = (uc.at(ir, j) - uc.at(il, j)) * sx;
    m.col(1) = (uc.at(i, jr) - uc.at(i, jl)) * sy;
    return m;
  };
  Real acc = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec2 p = g.center(i, j);
      if (geom && geom->signed_distance(p) <= 0) continue;
      Vec2 up = uc.at(i, j);
      Vec2 A = up - (ell + r * perp(p));
      Vec2 vv = v.vel(p);
      Vec2 adv_v = v.jac(p) * A;
      Vec2 adv_u = duc(i, j) * A;
      acc += Real(0.5) * (adv_v.dot(up) - adv_u.dot(vv)) - r * cross2(up, vv);
    }
  Real mass_term = geom ? geom->mass() * r * cross2(ell, v.ell) : Real(0);
  return mass_term + acc * g.cell_area();
}

}  // namespace detail

/// LHS - RHS of the time-integrated weak form over the sampled trajectory:
///   (u,v)_H(T) - (u0,v(0))_H
///     - int_0^T [ (u, dv/dt)_H + b(u,u,v) - nu-pairing + f[v] ] dt
/// with the viscous pairing selected by `kind` and time integration by the
/// trapezoid rule on the sample times.
inline Real weak_residual(const NSSolver& solver, const Trajectory& traj,
                          const TestFieldPath& v, ViscousPairing kind) {
  if (traj.states.size() < 2 || traj.states.size() != traj.rows.size())
    throw std::invalid_argument("weak_residual: trajectory needs matched samples");
  const NSConfig& cfg = solver.config();
  const Grid& g = cfg.grid;
  const FaceRho& rho = solver.face_rho();
  const size_t m = traj.states.size();

  std::vector<Real> integrand(m);
  for (size_t k = 0; k < m; ++k) {
    const NSState& s = traj.states[k];
    TestField vk = v.at(s.t);
    auto dvdt = [&](const Vec2& p) { return v.dvel_dt(s.t, p); };
    Real du = detail::h_inner(g, rho, s.w, dvdt);
    Real conv = cfg.has_body
                    ? detail::convective_pair(g, &cfg.body, s.w, s.body.ell, s.body.r, vk)
                    : detail::convective_pair(g, nullptr, s.w, Vec2::Zero(), 0, vk);
    Real visc = cfg.nu * detail::viscous_pair(g, s.w, cfg.bc, vk, kind);
    Real f = cfg.has_body ? forcing_f(s.body.Q(), cfg.gravity, vk.ell, vk.r, cfg.body) : 0;
    integrand[k] = du + conv - visc + f;
  }
  Real rhs = 0;
  for (size_t k = 1; k < m; ++k)
    rhs += Real(0.5) * (traj.states[k].t - traj.states[k - 1].t) * (integrand[k] + integrand[k - 1]);

  const NSState& s0 = traj.states.front();
  const NSState& sT = traj.states.back();
  TestField v0 = v.at(s0.t), vT = v.at(sT.t);
  Real lhs = detail::h_inner(g, rho, sT.w, vT.vel) - detail::h_inner(g, rho, s0.w, v0.vel);
  return lhs - rhs;
}

// ============================================================================
// Integration-by-parts identity suite (discrete calculus on sampled fields)
// ============================================================================

enum class IdentityKind { P1, P1curl, P2, divrot, boundary_moments };

struct IdentityPair {
  Real lhs = 0, rhs = 0, scale = 1;
  Real rel_gap() const { return std::abs(lhs - rhs) / std::max(scale, Real(1e-300)); }
};

namespace detail {

struct CenterCalc {
  VectorField f;
  ScalarField dxu, dyu, dxv, dyv;  // centered derivatives of both components
  explicit CenterCalc(const Grid& g) : f(g), dxu(g), dyu(g), dxv(g), dyv(g) {}
};

inline CenterCalc center_calculus(const Grid& g, const TestField& t) {
  CenterCalc c(g);
  c.f.fill([&](Real x, Real y) { return t.vel(Vec2(x, y)); });
  const int n = g.n;
  const Real ih2 = 1 / (2 * g.h), ih = 1 / g.h;
  auto dx = [&](const ScalarField& s, int i, int j) {
    if (i == 0) return (s(1, j) - s(0, j)) * ih;
    if (i == n - 1) return (s(n - 1, j) - s(n - 2, j)) * ih;
    return (s(i + 1, j) - s(i - 1, j)) * ih2;
  };
  auto dy = [&](const ScalarField& s, int i, int j) {
    if (j == 0) return (s(i, 1) - s(i, 0)) * ih;
    if (j == n - 1) return (s(i, n - 1) - s(i, n - 2)) * ih;
    return (s(i, j + 1) - s(i, j - 1)) * ih2;
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      c.dxu(i, j) = dx(c.f.x(), i, j);
      c.dyu(i, j) = dy(c.f.x(), i, j);
      c.dxv(i, j) = dx(c.f.y(), i, j);
      c.dyv(i, j) = dy(c.f.y(), i, j);
    }
  return c;
}

inline void require_solenoidal(const Grid& g, const CenterCalc& c, const char* who) {
  Real dv = 0, gr = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real d = c.dxu(i, j) + c.dyv(i, j);
      dv += d * d;
      gr += c.dxu(i, j) * c.dxu(i, j) + c.dyu(i, j) * c.dyu(i, j) +
            c.dxv(i, j) * c.dxv(i, j) + c.dyv(i, j) * c.dyv(i, j);
    }
  if (std::sqrt(dv) > Real(0.05) * std::sqrt(std::max(gr, Real(1e-300))))
    throw std::invalid_argument(std::string(who) + ": field is not divergence-free");
}

}  // namespace detail

/// Evaluate both sides of one of the five integral identities on sampled
/// fields with centered-difference calculus; the caller asserts closeness.
/// boundary_moments additionally needs the body whose boundary carries the
/// moments, and a first field vanishing on that boundary.
inline IdentityPair identity_check(IdentityKind kind, const Grid& g, const TestField& U,
                                   const TestField& V, const BodyGeometry* body = nullptr) {
  using detail::center_calculus;
  detail::CenterCalc cu = center_calculus(g, U);
  detail::CenterCalc cv = center_calculus(g, V);
  const int n = g.n;
  const Real da = g.cell_area();
  IdentityPair out;

  auto grad_norm = [&](const detail::CenterCalc& c) {
    Real s = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        s += c.dxu(i, j) * c.dxu(i, j) + c.dyu(i, j) * c.dyu(i, j) + c.dxv(i, j) * c.dxv(i, j) +
             c.dyv(i, j) * c.dyv(i, j);
    return std::sqrt(s * da);
  };

  switch (kind) {
    case IdentityKind::P1:
    case IdentityKind::P1curl: {
      detail::require_solenoidal(g, cv, "identity_check");
      Real gg = 0, dd = 0, ww = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          gg += cu.dxu(i, j) * cv.dxu(i, j) + cu.dyu(i, j) * cv.dyu(i, j) +
                cu.dxv(i, j) * cv.dxv(i, j) + cu.dyv(i, j) * cv.dyv(i, j);
          Real du12 = Real(0.5) * (cu.dyu(i, j) + cu.dxv(i, j));
          Real dv12 = Real(0.5) * (cv.dyu(i, j) + cv.dxv(i, j));
          dd += cu.dxu(i, j) * cv.dxu(i, j) + cu.dyv(i, j) * cv.dyv(i, j) + 2 * du12 * dv12;
          ww += Real(0.5) * (cu.dxv(i, j) - cu.dyu(i, j)) * (cv.dxv(i, j) - cv.dyu(i, j));
        }
      out.lhs = gg * da;
      out.rhs = 2 * (kind == IdentityKind::P1 ? dd : ww) * da;
      out.scale = grad_norm(cu) * grad_norm(cv);
      break;
    }
    case IdentityKind::P2: {
      detail::require_solenoidal(g, cv, "identity_check");
      Real l = 0, r = 0, sc = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          Vec2 u = cu.f.at(i, j), v = cv.f.at(i, j);
          Mat2 ju;
          ju << cu.dxu(i, j), cu.dyu(i, j), cu.dxv(i, j), cu.dyv(i, j);
          Vec2 conv = ju * u;
          Mat2 du = Real(0.5) * (ju + ju.transpose());
          l += v.dot(conv);
          r += 2 * v.dot(du * u);
          sc += conv.squaredNorm();
        }
      out.lhs = l * da;
      out.rhs = r * da;
      Real vnorm = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) vnorm += cv.f.at(i, j).squaredNorm();
      out.scale = std::sqrt(vnorm * da) * std::sqrt(sc * da);
      break;
    }
    case IdentityKind::divrot: {
      // a := curl U (axial scalar), b := V; pointwise in the continuum:
      //   -a (curl b) = div(a b^perp) - b . (perp grad a)
      ScalarField a(g);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = cu.dxv(i, j) - cu.dyu(i, j);
      ScalarField f1(g), f2(g);  // components of a b^perp = a(-b2, b1)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          f1(i, j) = -a(i, j) * cv.f.y()(i, j);
          f2(i, j) = a(i, j) * cv.f.x()(i, j);
        }
      const Real ih2 = 1 / (2 * g.h), ih = 1 / g.h;
      auto dx = [&](const ScalarField& s, int i, int j) {
        if (i == 0) return (s(1, j) - s(0, j)) * ih;
        if (i == n - 1) return (s(n - 1, j) - s(n - 2, j)) * ih;
        return (s(i + 1, j) - s(i - 1, j)) * ih2;
      };
      auto dy = [&](const ScalarField& s, int i, int j) {
        if (j == 0) return (s(i, 1) - s(i, 0)) * ih;
        if (j == n - 1) return (s(i, n - 1) - s(i, n - 2)) * ih;
        return (s(i, j + 1) - s(i, j - 1)) * ih2;
      };
      Real l = 0, r = 0, sc = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          Real curlb = cv.dxv(i, j) - cv.dyu(i, j);
          l += -a(i, j) * curlb;
          Real divab = dx(f1, i, j) + dy(f2, i, j);
          Real bdota = cv.f.x()(i, j) * dy(a, i, j) - cv.f.y()(i, j) * dx(a, i, j);
          r += divab - bdota;
          sc += a(i, j) * a(i, j) * (1 + curlb * curlb);
        }
      out.lhs = l * da;
      out.rhs = r * da;
      out.scale = std::sqrt(sc * da) * std::max(Real(1), grad_norm(cv));
      break;
    }
    case IdentityKind::boundary_moments: {
      if (!body) throw std::invalid_argument("identity_check: boundary_moments needs a body");
      // moments of U's vorticity and deformation over the body boundary,
      // against V; U must vanish on that boundary (no-slip difference field)
      ScalarField om(g), d11(g), d22(g), d12(g);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          om(i, j) = cu.dxv(i, j) - cu.dyu(i, j);
          d11(i, j) = cu.dxu(i, j);
          d22(i, j) = cu.dyv(i, j);
          d12(i, j) = Real(0.5) * (cu.dyu(i, j) + cu.dxv(i, j));
        }
      auto qs = body->boundary_quadrature(512);
      Real l = 0, r = 0, sc = 0, umax = 0, uref = 0;
      for (const auto& q : qs) {
        Vec2 v = V.vel(q.x);
        Vec2 u = U.vel(q.x);
        umax = std::max(umax, u.norm());
        Real w = om.sample(q.x);
        Mat2 d;
        d << d11.sample(q.x), d12.sample(q.x), d12.sample(q.x), d22.sample(q.x);
        // (v x omega) . n with axial omega reduces to -omega (v x n)
        l += q.weight * (-w * cross2(v, q.normal));
        r += q.weight * 2 * (d * q.normal).dot(v);
        sc += q.weight * (std::abs(w) + 2 * (d * q.normal).norm()) * v.norm();
      }
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) uref = std::max(uref, cu.f.at(i, j).norm());
      if (umax > Real(0.05) * std::max(uref, Real(1e-300)))
        throw std::invalid_argument("identity_check: first field must vanish on the body boundary");
      out.lhs = l;
      out.rhs = r;
      out.scale = std::max(sc, Real(1e-300));
      break;
    }
  }
  return out;
}

}  // namespace kfsi
