#pragma once

/// @file mac.hpp
/// @brief Staggered (MAC) velocity layout on the truncation box and the
///        discrete operators the flow solver is built from: divergence,
///        pressure gradient, the deformation quadrature and its adjoint,
///        corner vorticity, upwind advection, and face-weighted masses.
///
/// Layout: u lives at x-faces, (n+1) x n, u(i,j) at (xf(i), yc(j));
///         v lives at y-faces, n x (n+1), v(i,j) at (xc(i), yf(j)).
/// Box-boundary normal faces (i = 0, n for u; j = 0, n for v) are pinned to
/// zero in both boundary modes; tangential wall behaviour enters through
/// ghost reflection (no-slip: mirror with sign flip, free-slip: plain mirror).

#include <functional>

#include "kfsi/field.hpp"
#include "kfsi/geometry.hpp"
#include "kfsi/grid.hpp"

namespace kfsi {

enum class BoxBC { dirichlet, freeslip };

// =========================================================================
// Velocity container
// =========================================================================

struct MacVel {
  Eigen::ArrayXXd u;  // (n+1) x n
  Eigen::ArrayXXd v;  // n x (n+1)

  MacVel() = default;
  explicit MacVel(const Grid& g)
      : u(Eigen::ArrayXXd::Zero(g.n + 1, g.n)), v(Eigen::ArrayXXd::Zero(g.n, g.n + 1)) {}

  void setZero() { u.setZero(); v.setZero(); }
  void enforce_normal_bc() {
    u.row(0).setZero();
    u.row(u.rows() - 1).setZero();
    v.col(0).setZero();
    v.col(v.cols() - 1).setZero();
  }
};

/// Sample a smooth velocity field at the face points (normal faces zeroed).
inline MacVel mac_fill(const Grid& g, const std::function<Vec2(Real, Real)>& f) {
  MacVel w(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) w.u(i, j) = f(g.xf(i), g.yc(j)).x();
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) w.v(i, j) = f(g.xc(i), g.yf(j)).y();
  w.enforce_normal_bc();
  return w;
}

/// Face samples of a rigid velocity ell + r x^perp (exactly divergence-free
/// discretely because each component is affine).
inline MacVel mac_rigid(const Grid& g, const Vec2& ell, Real r) {
  MacVel w(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) w.u(i, j) = ell.x() - r * g.yc(j);
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) w.v(i, j) = ell.y() + r * g.xc(i);
  return w;  // normal faces intentionally kept (used as a target field)
}

/// Cell-centered average for diagnostics on the collocated machinery.
inline VectorField mac_to_center(const Grid& g, const MacVel& w) {
  VectorField out(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      out.set(i, j, Vec2(Real(0.5) * (w.u(i, j) + w.u(i + 1, j)),
                         Real(0.5) * (w.v(i, j) + w.v(i, j + 1))));
  return out;
}

/// Bilinear sample of a MAC field at an arbitrary point (component-wise on
/// each staggered lattice, clamped at the box edge).
inline Vec2 mac_sample(const Grid& g, const MacVel& w, Real x, Real y) {
  auto plane = [](const Eigen::ArrayXXd& a, Real s, Real t) {
    int ni = static_cast<int>(a.rows()), nj = static_cast<int>(a.cols());
    s = std::min(std::max(s, Real(0)), Real(ni - 1));
    t = std::min(std::max(t, Real(0)), Real(nj - 1));
    int i = std::min(static_cast<int>(s), ni - 2), j = std::min(static_cast<int>(t), nj - 2);
    if (ni == 1) i = 0;
    if (nj == 1) j = 0;
    Real fx = s - i, fy = t - j;
    int i1 = std::min(i + 1, ni - 1), j1 = std::min(j + 1, nj - 1);
    return (1 - fx) * (1 - fy) * a(i, j) + fx * (1 - fy) * a(i1, j) +
           (1 - fx) * fy * a(i, j1) + fx * fy * a(i1, j1);
  };
  Real su = (x + g.L) / g.h, tu = (y + g.L) / g.h - Real(0.5);
  Real sv = (x + g.L) / g.h - Real(0.5), tv = (y + g.L) / g.h;
  return Vec2(plane(w.u, su, tu), plane(w.v, sv, tv));
}

// =========================================================================
// Divergence / gradient (duality pair of the projection)
// =========================================================================

inline ScalarField mac_divergence(const Grid& g, const MacVel& w) {
  ScalarField d(g);
  const Real ih = 1 / g.h;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      d(i, j) = (w.u(i + 1, j) - w.u(i, j) + w.v(i, j + 1) - w.v(i, j)) * ih;
  return d;
}

/// w -= coef_face * grad(phi); boundary-normal faces untouched (zero-flux
/// closure, matching the weighted Poisson operator exactly).
inline void mac_sub_scaled_gradient(const Grid& g, const ScalarField& phi,
                                    const Eigen::ArrayXXd& cx, const Eigen::ArrayXXd& cy,
                                    MacVel& w) {
  const Real ih = 1 / g.h;
  for (int j = 0; j < g.n; ++j)
    for (int i = 1; i < g.n; ++i)
      w.u(i, j) -= cx(i, j) * (phi(i, j) - phi(i - 1, j)) * ih;
  for (int j = 1; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      w.v(i, j) -= cy(i, j) * (phi(i, j) - phi(i, j - 1)) * ih;
}

// =========================================================================
// Face densities and masses
// =========================================================================

/// rho on faces: 1 in fluid, rho_body where the face center sits inside the
/// body; chi arrays additionally report the sharp indicator itself.
struct FaceRho {
  Eigen::ArrayXXd rx, ry;      // densities, (n+1) x n and n x (n+1)
  Eigen::ArrayXXd chix, chiy;  // body indicators (0/1)
};

inline FaceRho face_density(const Grid& g, const BodyGeometry& body) {
  FaceRho f;
  f.rx.resize(g.n + 1, g.n);
  f.chix.resize(g.n + 1, g.n);
  f.ry.resize(g.n, g.n + 1);
  f.chiy.resize(g.n, g.n + 1);
  auto chi = [&](Real x, Real y) {
    return body.signed_distance(Vec2(x, y)) < 0 ? Real(1) : Real(0);
  };
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Real c = chi(g.xf(i), g.yc(j));
      f.chix(i, j) = c;
      f.rx(i, j) = 1 + (body.density() - 1) * c;
    }
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real c = chi(g.xc(i), g.yf(j));
      f.chiy(i, j) = c;
      f.ry(i, j) = 1 + (body.density() - 1) * c;
    }
  return f;
}

inline FaceRho face_density_uniform(const Grid& g) {
  FaceRho f;
  f.rx = Eigen::ArrayXXd::Ones(g.n + 1, g.n);
  f.chix = Eigen::ArrayXXd::Zero(g.n + 1, g.n);
  f.ry = Eigen::ArrayXXd::Ones(g.n, g.n + 1);
  f.chiy = Eigen::ArrayXXd::Zero(g.n, g.n + 1);
  return f;
}

/// Kinetic energy in the combined (rho-weighted) metric:
/// (1/2) h^2 sum rho |w|^2 over faces.
inline Real mac_kinetic_energy(const Grid& g, const MacVel& w, const FaceRho& rho) {
  Real s = (rho.rx * w.u * w.u).sum() + (rho.ry * w.v * w.v).sum();
  return Real(0.5) * s * g.h * g.h;
}

inline Real mac_weighted_dot(const Grid& g, const MacVel& a, const MacVel& b, const FaceRho& rho) {
  return ((rho.rx * a.u * b.u).sum() + (rho.ry * a.v * b.v).sum()) * g.h * g.h;
}

// =========================================================================
// Deformation tensor quadrature (centers for D11/D22, corners for D12)
// =========================================================================

struct MacDeform {
  Eigen::ArrayXXd d11, d22;  // n x n at centers
  Eigen::ArrayXXd d12;       // (n+1) x (n+1) at corners
};

/// Ghost-reflected tangential difference du/dy at a horizontal wall corner:
/// no-slip gives 2 u_adj / h, free-slip gives 0.
inline MacDeform mac_deformation(const Grid& g, const MacVel& w, BoxBC bc) {
  const int n = g.n;
  const Real ih = 1 / g.h;
  MacDeform d;
  d.d11.resize(n, n);
  d.d22.resize(n, n);
  d.d12 = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      d.d11(i, j) = (w.u(i + 1, j) - w.u(i, j)) * ih;
      d.d22(i, j) = (w.v(i, j + 1) - w.v(i, j)) * ih;
    }
  const Real wallf = (bc == BoxBC::dirichlet) ? 2 : 0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Real dudy;
      if (j == 0)
        dudy = wallf * w.u(i, 0) * ih;
      else if (j == n)
        dudy = -wallf * w.u(i, n - 1) * ih;
      else
        dudy = (w.u(i, j) - w.u(i, j - 1)) * ih;
      Real dvdx;
      if (i == 0)
        dvdx = wallf * w.v(0, j) * ih;
      else if (i == n)
        dvdx = -wallf * w.v(n - 1, j) * ih;
      else
        dvdx = (w.v(i, j) - w.v(i - 1, j)) * ih;
      d.d12(i, j) = Real(0.5) * (dudy + dvdx);
    }
  // corner values involving pinned normal faces are fine as-is: u(0,·) etc.
  // are genuine (zero) degrees of freedom.
  return d;
}

/// integral |D(w)|^2 with the corner weight 2 for the off-diagonal pair.
inline Real mac_deform_quadrature(const Grid& g, const MacDeform& d) {
  return ((d.d11 * d.d11).sum() + (d.d22 * d.d22).sum() + 2 * (d.d12 * d.d12).sum()) * g.h * g.h;
}

/// Adjoint of the deformation quadrature: accumulates B w into out, where
/// (B a, b) = h^2 [ sum d11(a)d11(b) + d22(a)d22(b) + 2 sum d12(a)d12(b) ]
/// in the plain face dot product.  Used matrix-free by the viscous solve.
inline void mac_deform_adjoint(const Grid& g, const MacDeform& d, BoxBC bc, MacVel& out) {
  const int n = g.n;
  const Real h = g.h;
  out.u.setZero();
  out.v.setZero();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Real a = h * d.d11(i, j);
      out.u(i + 1, j) += a;
      out.u(i, j) -= a;
      Real b = h * d.d22(i, j);
      out.v(i, j + 1) += b;
      out.v(i, j) -= b;
    }
  const Real wallf = (bc == BoxBC::dirichlet) ? 2 : 0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Real c = h * d.d12(i, j);  // 2 * h^2 * d12 * (1/(2h)) per leg
      if (j == 0)
        out.u(i, 0) += wallf * c;
      else if (j == n)
        out.u(i, n - 1) -= wallf * c;
      else {
        out.u(i, j) += c;
        out.u(i, j - 1) -= c;
      }
      if (i == 0)
        out.v(0, j) += wallf * c;
      else if (i == n)
        out.v(n - 1, j) -= wallf * c;
      else {
        out.v(i, j) += c;
        out.v(i - 1, j) -= c;
      }
    }
  out.enforce_normal_bc();  // pinned DOFs carry no equation
}

/// Corner vorticity dv/dx - du/dy with the same ghost closure as d12.
inline Eigen::ArrayXXd mac_vorticity(const Grid& g, const MacVel& w, BoxBC bc) {
  const int n = g.n;
  const Real ih = 1 / g.h;
  Eigen::ArrayXXd om(n + 1, n + 1);
  const Real wallf = (bc == BoxBC::dirichlet) ? 2 : 0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Real dudy;
      if (j == 0)
        dudy = wallf * w.u(i, 0) * ih;
      else if (j == n)
        dudy = -wallf * w.u(i, n - 1) * ih;
      else
        dudy = (w.u(i, j) - w.u(i, j - 1)) * ih;
      Real dvdx;
      if (i == 0)
        dvdx = wallf * w.v(0, j) * ih;
      else if (i == n)
        dvdx = -wallf * w.v(n - 1, j) * ih;
      else
        dvdx = (w.v(i, j) - w.v(i - 1, j)) * ih;
      om(i, j) = dvdx - dudy;
    }
  return om;
}

/// Center-collocated squared-magnitude maps for strip/masked quadratures:
/// |D|^2, |W|^2 = omega^2/2, |grad u|^2 = |D|^2 + |W|^2.
struct MacDissipationMaps {
  Eigen::ArrayXXd deform_sq, asym_sq, grad_sq;  // n x n
};

inline MacDissipationMaps mac_dissipation_maps(const Grid& g, const MacVel& w, BoxBC bc) {
  const int n = g.n;
  MacDeform d = mac_deformation(g, w, bc);
  Eigen::ArrayXXd om = mac_vorticity(g, w, bc);
  MacDissipationMaps m;
  m.deform_sq.resize(n, n);
  m.asym_sq.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Real c12 = Real(0.25) * (d.d12(i, j) * d.d12(i, j) + d.d12(i + 1, j) * d.d12(i + 1, j) +
                               d.d12(i, j + 1) * d.d12(i, j + 1) + d.d12(i + 1, j + 1) * d.d12(i + 1, j + 1));
      Real om2 = Real(0.25) * (om(i, j) * om(i, j) + om(i + 1, j) * om(i + 1, j) +
                               om(i, j + 1) * om(i, j + 1) + om(i + 1, j + 1) * om(i + 1, j + 1));
      m.deform_sq(i, j) = d.d11(i, j) * d.d11(i, j) + d.d22(i, j) * d.d22(i, j) + 2 * c12;
      m.asym_sq(i, j) = Real(0.5) * om2;
    }
  m.grad_sq = m.deform_sq + m.asym_sq;
  return m;
}

// =========================================================================
// Advection (second-order upwind, first-order fallback at walls)
// =========================================================================

namespace detail {

/// Value of the tangential component with ghost reflection outside [0, m-1].
inline Real refl(const Eigen::ArrayXXd& a, int i, int j, bool along_j, int m, Real sgn) {
  int k = along_j ? j : i;
  if (k < 0) k = -1 - k; else if (k >= m) k = 2 * m - 1 - k; else sgn = 1;
  return sgn * (along_j ? a(i, k) : a(k, j));
}

/// Upwind-biased derivative from up to two upstream samples f1 (nearest) and
/// f2; falls back to first order when told only one is trustworthy.
inline Real upwind(Real f0, Real f1, Real f2, bool second, Real h) {
  if (second) return (3 * f0 - 4 * f1 + f2) / (2 * h);
  return (f0 - f1) / h;
}

}  // namespace detail

/// tendency = -((rel)·grad) w at interior faces; rel is the advecting field
/// (velocity relative to the solid's rigid extension).
inline MacVel mac_advect(const Grid& g, const MacVel& w, const MacVel& rel, BoxBC bc) {
  const int n = g.n;
  const Real h = g.h;
  const Real sgn = (bc == BoxBC::dirichlet) ? -1 : 1;
  MacVel out(g);
  // ---- u faces (i = 1..n-1, j = 0..n-1)
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) {
      Real ax = rel.u(i, j);
      Real ay = Real(0.25) * (rel.v(i - 1, j) + rel.v(i, j) + rel.v(i - 1, j + 1) + rel.v(i, j + 1));
      Real dudx, dudy;
      if (ax >= 0)
        dudx = detail::upwind(w.u(i, j), w.u(i - 1, j), i >= 2 ? w.u(i - 2, j) : 0, i >= 2, h);
      else
        dudx = -detail::upwind(w.u(i, j), w.u(i + 1, j), i + 2 <= n ? w.u(i + 2, j) : 0, i + 2 <= n, h);
      auto uy = [&](int jj) { return detail::refl(w.u, i, jj, true, n, sgn); };
      if (ay >= 0)
        dudy = detail::upwind(w.u(i, j), uy(j - 1), uy(j - 2), j >= 1, h);
      else
        dudy = -detail::upwind(w.u(i, j), uy(j + 1), uy(j + 2), j + 1 < n, h);
      out.u(i, j) = -(ax * dudx + ay * dudy);
    }
  // ---- v faces (i = 0..n-1, j = 1..n-1)
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Real ay = rel.v(i, j);
      Real ax = Real(0.25) * (rel.u(i, j - 1) + rel.u(i, j) + rel.u(i + 1, j - 1) + rel.u(i + 1, j));
      Real dvdx, dvdy;
      auto vx = [&](int ii) { return detail::refl(w.v, ii, j, false, n, sgn); };
      if (ax >= 0)
        dvdx = detail::upwind(w.v(i, j), vx(i - 1), vx(i - 2), i >= 1, h);
      else
        dvdx = -detail::upwind(w.v(i, j), vx(i + 1), vx(i + 2), i + 1 < n, h);
      if (ay >= 0)
        dvdy = detail::upwind(w.v(i, j), w.v(i, j - 1), j >= 2 ? w.v(i, j - 2) : 0, j >= 2, h);
      else
        dvdy = -detail::upwind(w.v(i, j), w.v(i, j + 1), j + 2 <= n ? w.v(i, j + 2) : 0, j + 2 <= n, h);
      out.v(i, j) = -(ax * dvdx + ay * dvdy);
    }
  return out;
}

inline Real mac_max_speed(const MacVel& w) {
  Real mu = w.u.abs().maxCoeff();
  Real mv = w.v.abs().maxCoeff();
  return std::max(mu, mv);
}

/// Pointwise rotation of the velocity components by `ang`; the off-component
/// at each face is a 4-point average, so the map is exactly the identity when
/// ang = 0 and second-order accurate otherwise.  Used for the frame term.
inline void mac_rotate_components(MacVel& w, Real ang) {
  Real c = std::cos(ang), s = std::sin(ang);
  Eigen::ArrayXXd un = w.u, vn = w.v;
  int nu_r = static_cast<int>(w.u.rows()), nu_c = static_cast<int>(w.u.cols());
  for (int j = 0; j < nu_c; ++j)
    for (int i = 1; i < nu_r - 1; ++i) {
      Real vavg = Real(0.25) * (w.v(i - 1, j) + w.v(i, j) + w.v(i - 1, j + 1) + w.v(i, j + 1));
      un(i, j) = c * w.u(i, j) - s * vavg;
    }
  int nv_r = static_cast<int>(w.v.rows()), nv_c = static_cast<int>(w.v.cols());
  for (int j = 1; j < nv_c - 1; ++j)
    for (int i = 0; i < nv_r; ++i) {
      Real uavg = Real(0.25) * (w.u(i, j - 1) + w.u(i, j) + w.u(i + 1, j - 1) + w.u(i + 1, j));
      vn(i, j) = s * uavg + c * w.v(i, j);
    }
  w.u = un;
  w.v = vn;
  w.enforce_normal_bc();
}

}  // namespace kfsi
