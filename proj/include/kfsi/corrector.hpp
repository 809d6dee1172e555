#pragma once

/// @file corrector.hpp
/// @brief Boundary-strip corrector: stream function of the relative exterior
///        flow recovered by ray integration, viscosity-scaled cutoff profiles,
///        and the exactly divergence-free strip velocity assembled from their
///        product, with the product-rule identity checked along two paths.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kfsi/geometry.hpp"
#include "kfsi/mac.hpp"
#include "kfsi/rigid_body.hpp"

namespace kfsi {

// =========================================================================
// Cutoff profiles
// =========================================================================

/// Profile xi on [0, inf): xi(0) = 1, xi = 0 beyond 1.  The companion profile
/// is xi~(r) = r xi'(r), which vanishes at both ends of the ramp.
enum class XiProfile { quadratic };

inline Real xi_value(XiProfile p, Real r) {
  switch (p) {
    case XiProfile::quadratic:
      if (r >= 1) return 0;
      if (r <= 0) return 1;
      return (1 - r) * (1 - r);
  }
  return 0;
}

inline Real xi_tilde_value(XiProfile p, Real r) {
  switch (p) {
    case XiProfile::quadratic:
      if (r >= 1 || r <= 0) return 0;
      return -2 * r * (1 - r);
  }
  return 0;
}

// =========================================================================
// Stream function of the relative flow
// =========================================================================

/// Node-based scalar whose discrete curl reproduces the relative velocity:
/// (d_y psi, -d_x psi) = u - u_S to discretization order, psi = 0 on the
/// body surface by construction.
struct StreamField {
  Eigen::ArrayXXd psi;  // (n+1) x (n+1), node (i, j) at (xf(i), yf(j))
  Real band = 0;        // populated for signed distance below this value
};

namespace detail {

inline Vec2 sdf_gradient(const BodyGeometry& body, const Vec2& x, Real step) {
  Vec2 gdir(
      body.signed_distance(Vec2(x.x() + step, x.y())) - body.signed_distance(Vec2(x.x() - step, x.y())),
      body.signed_distance(Vec2(x.x(), x.y() + step)) - body.signed_distance(Vec2(x.x(), x.y() - step)));
  Real norm = gdir.norm();
  return norm > 0 ? Vec2(gdir / norm) : Vec2(1, 0);
}

/// psi(x) = integral_0^d [u n_y - v n_x] ds along the inward-to-outward ray
/// through the closest boundary point; composite Simpson on the ray.
inline StreamField stream_from_rays(const Grid& g, const BodyGeometry& body,
                                    const std::function<Vec2(const Vec2&)>& u_rel, Real band) {
  const int n = g.n;
  const Real h = g.h;
  StreamField s;
  s.psi = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  s.band = band;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Vec2 x(g.xf(i), g.yf(j));
      Real d = body.signed_distance(x);
      if (d >= band || d <= -h) continue;
      Vec2 nh = sdf_gradient(body, x, Real(0.5) * h);
      Vec2 p0 = x - d * nh;
      int m = 2 * std::max(2, int(std::ceil(std::abs(d) / (Real(0.5) * h))));
      Real ds = d / m;
      Real acc = 0;
      for (int k = 0; k <= m; ++k) {
        Vec2 q = p0 + (k * ds) * nh;
        if (d > 0) {
          // Rays from exterior nodes must sample the fluid-side branch; the
          // reconstructed foot point can land a hair inside the surface.
          Real dq = body.signed_distance(q);
          if (dq < Real(1e-9)) q += (Real(1e-9) - dq) * nh;
        }
        Vec2 u = u_rel(q);
        Real f = u.x() * nh.y() - u.y() * nh.x();
        Real wgt = (k == 0 || k == m) ? 1 : (k % 2 ? 4 : 2);
        acc += wgt * f;
      }
      Real psi = acc * ds / 3;
      // Taper the interior continuation so nodes deeper than one cell carry
      // exactly zero and the strip field stays pinned to the interface.
      if (d < 0) {
        Real t = 1 + d / h;
        psi *= t * t * t * (10 + t * (-15 + 6 * t));
      }
      s.psi(i, j) = psi;
    }
  return s;
}

}  // namespace detail

/// Stream of an analytically-given relative field.  Rejects fields that leak
/// through the boundary: the stream cannot vanish on the surface otherwise.
inline StreamField build_stream_tensor(const Grid& g, const BodyGeometry& body,
                                       const std::function<Vec2(const Vec2&)>& u_rel, Real band,
                                       Real slip_tol = 1e-6) {
  Real worst = 0, scale = 0;
  for (const auto& q : body.boundary_quadrature(512)) {
    Vec2 u = u_rel(q.x);
    worst = std::max(worst, std::abs(u.dot(q.normal)));
    scale = std::max(scale, u.norm());
  }
  if (worst > slip_tol * std::max(Real(1), scale))
    throw std::invalid_argument("stream construction: relative field has normal slip " +
                                std::to_string(worst) + " above tolerance " +
                                std::to_string(slip_tol * std::max(Real(1), scale)));
  return detail::stream_from_rays(g, body, u_rel, band);
}

/// Stream of a grid state relative to the body motion.  The slip gate uses
/// the fluid-side extrapolated trace, since sampling on the surface itself
/// mixes values across the tangential interface jump.
inline StreamField build_stream_tensor(const Grid& g, const BodyGeometry& body, const MacVel& w,
                                       const BodyState& bs, Real band, Real slip_tol = 0.25) {
  Real worst = 0, scale = 0;
  for (const auto& q : body.boundary_quadrature(512)) {
    Vec2 u1 = mac_sample(g, w, q.x.x() + g.h * q.normal.x(), q.x.y() + g.h * q.normal.y());
    Vec2 u2 = mac_sample(g, w, q.x.x() + 2 * g.h * q.normal.x(), q.x.y() + 2 * g.h * q.normal.y());
    Vec2 ue = 2 * u1 - u2 - bs.solid_velocity_at(q.x);
    worst = std::max(worst, std::abs(ue.dot(q.normal)));
    scale = std::max(scale, ue.norm());
  }
  if (worst > slip_tol * std::max(Real(1), scale))
    throw std::invalid_argument("stream construction: grid state has boundary slip " +
                                std::to_string(worst) + " above tolerance " +
                                std::to_string(slip_tol * std::max(Real(1), scale)));
  auto rel = [&g, &w, &bs](const Vec2& x) -> Vec2 {
    return mac_sample(g, w, x.x(), x.y()) - bs.solid_velocity_at(x);
  };
  return detail::stream_from_rays(g, body, rel, band);
}

// =========================================================================
// Strip corrector
// =========================================================================

struct Corrector {
  Grid grid{2, 1.0};
  Real c = 0;   // strip parameter: width = c * nu
  Real nu = 0;  // viscosity the strip is tuned to
  XiProfile profile = XiProfile::quadratic;
  StreamField stream;        // psi at nodes
  Eigen::ArrayXXd z;         // xi(d / (c nu)) at nodes, 1 inside the body
  Eigen::ArrayXXd z_tilde;   // xi~(d / (c nu)) at nodes, 0 inside
  Eigen::ArrayXXd a_flat;    // psi / d at nodes, one-sided near the surface
  MacVel v;                  // discrete curl of z * psi: divergence-free
  Real fakemother_gap = 0;   // product-rule vs direct differencing (round-off)
  Real analytic_form_gap = 0;  // psi-avg dz term vs z~ a_flat grad-d term

  Corrector() : v(grid) {}
};

/// Assemble the strip field v = curl(z psi) on the staggered grid.  The
/// product-rule path avg(z) d psi + avg(psi) d z is algebraically identical
/// to differencing the product, so the two assemblies agree to round-off;
/// the second term is additionally compared against its closed form
/// z~ (psi/d) grad-d at faces clear of the interface.
inline Corrector build_corrector(const Grid& g, const BodyGeometry& body, const StreamField& stream,
                                 Real c, Real nu, XiProfile profile = XiProfile::quadratic) {
  const int n = g.n;
  const Real h = g.h;
  const Real width = c * nu;
  if (width < 4 * h - 1e-12)
    throw std::invalid_argument("corrector strip unresolved: c*nu = " + std::to_string(width) +
                                " below the 4h = " + std::to_string(4 * h) + " floor");
  if (stream.band < width)
    throw std::invalid_argument("corrector: stream band " + std::to_string(stream.band) +
                                " narrower than the strip " + std::to_string(width));

  Corrector co;
  co.grid = g;
  co.c = c;
  co.nu = nu;
  co.profile = profile;
  co.stream = stream;
  co.z = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  co.z_tilde = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  co.a_flat = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  co.v = MacVel(g);

  Eigen::ArrayXXd dist(n + 1, n + 1);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Vec2 x(g.xf(i), g.yf(j));
      Real d = body.signed_distance(x);
      dist(i, j) = d;
      co.z(i, j) = d <= 0 ? Real(1) : xi_value(profile, d / width);
      co.z_tilde(i, j) = d <= 0 ? Real(0) : xi_tilde_value(profile, d / width);
      if (d >= stream.band) continue;
      if (std::abs(d) <= Real(1.5) * h) {
        // One-sided linear extrapolation from two clean fluid-side points
        // avoids the 0/0 of psi/d at the surface.
        Vec2 nh = detail::sdf_gradient(body, x, Real(0.5) * h);
        auto ratio = [&](Real off) {
          Vec2 q = x + (off - d) * nh;
          Real dq = body.signed_distance(q);
          // psi sampled bilinearly on the node lattice
          Real gx = (q.x() + g.L) / h, gy = (q.y() + g.L) / h;
          int i0 = std::min(std::max(int(std::floor(gx)), 0), n - 1);
          int j0 = std::min(std::max(int(std::floor(gy)), 0), n - 1);
          Real fx = gx - i0, fy = gy - j0;
          Real p = (1 - fx) * (1 - fy) * stream.psi(i0, j0) + fx * (1 - fy) * stream.psi(i0 + 1, j0) +
                   (1 - fx) * fy * stream.psi(i0, j0 + 1) + fx * fy * stream.psi(i0 + 1, j0 + 1);
          return p / dq;
        };
        Real a2 = ratio(2 * h), a3 = ratio(3 * h);
        co.a_flat(i, j) = a2 + (d - 2 * h) * (a3 - a2) / h;
      } else if (d > 0) {
        co.a_flat(i, j) = stream.psi(i, j) / d;
      }
    }

  // Faces: direct differencing of the product (primary), product-rule
  // reassociation (identity check), and the closed-form z~ term.
  Real gap_fm = 0, gap_an = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) {
      Real p0 = stream.psi(i, j), p1 = stream.psi(i, j + 1);
      Real z0 = co.z(i, j), z1 = co.z(i, j + 1);
      Real direct = (z1 * p1 - z0 * p0) / h;
      Real zbar_dpsi = Real(0.5) * (z0 + z1) * (p1 - p0) / h;
      Real pbar_dz = Real(0.5) * (p0 + p1) * (z1 - z0) / h;
      co.v.u(i, j) = direct;
      gap_fm = std::max(gap_fm, std::abs(zbar_dpsi + pbar_dz - direct));
      Real dmin = std::min(dist(i, j), dist(i, j + 1));
      if (dmin > h && std::max(dist(i, j), dist(i, j + 1)) < width) {
        Real closed = Real(0.5) * (co.z_tilde(i, j) + co.z_tilde(i, j + 1)) *
                      Real(0.5) * (co.a_flat(i, j) + co.a_flat(i, j + 1)) *
                      (dist(i, j + 1) - dist(i, j)) / h;
        gap_an = std::max(gap_an, std::abs(closed - pbar_dz));
      }
    }
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i) {
      Real p0 = stream.psi(i, j), p1 = stream.psi(i + 1, j);
      Real z0 = co.z(i, j), z1 = co.z(i + 1, j);
      Real direct = -(z1 * p1 - z0 * p0) / h;
      Real zbar_dpsi = -Real(0.5) * (z0 + z1) * (p1 - p0) / h;
      Real pbar_dz = -Real(0.5) * (p0 + p1) * (z1 - z0) / h;
      co.v.v(i, j) = direct;
      gap_fm = std::max(gap_fm, std::abs(zbar_dpsi + pbar_dz - direct));
      Real dmin = std::min(dist(i, j), dist(i + 1, j));
      if (dmin > h && std::max(dist(i, j), dist(i + 1, j)) < width) {
        Real closed = -Real(0.5) * (co.z_tilde(i, j) + co.z_tilde(i + 1, j)) *
                      Real(0.5) * (co.a_flat(i, j) + co.a_flat(i + 1, j)) *
                      (dist(i + 1, j) - dist(i, j)) / h;
        gap_an = std::max(gap_an, std::abs(closed - pbar_dz));
      }
    }
  co.fakemother_gap = gap_fm;
  co.analytic_form_gap = gap_an;
  return co;
}

// =========================================================================
// Norms and scalings
// =========================================================================

struct CorrectorNorms {
  Real sup_v = 0;       // expect O(1) in the vanishing-viscosity family
  Real h_norm = 0;      // expect O(nu^{1/2})
  Real dt_h_norm = 0;   // expect O(nu^{1/2}); filled by the time-difference helper
  Real grad_strip = 0;  // L2 gradient over the strip, expect O(nu^{-1/2})
  Real sup_dv = 0;      // distance-weighted sup, expect O(nu)
};

inline CorrectorNorms measure_corrector(const Corrector& co, const BodyGeometry& body) {
  const Grid& g = co.grid;
  const int n = g.n;
  const Real width = co.c * co.nu;
  CorrectorNorms out;
  out.sup_v = std::max(co.v.u.abs().maxCoeff(), co.v.v.abs().maxCoeff());
  out.h_norm = std::sqrt(2 * mac_kinetic_energy(g, co.v, face_density(g, body)));
  MacDissipationMaps maps = mac_dissipation_maps(g, co.v, BoxBC::freeslip);
  Real acc = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Real d = body.signed_distance(Vec2(g.xc(i), g.yc(j)));
      if (d > 0 && d < width) acc += maps.grad_sq(i, j);
    }
  out.grad_strip = std::sqrt(acc * g.h * g.h);
  Real sdv = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i)
      if (co.v.u(i, j) != 0)
        sdv = std::max(sdv, std::abs(body.signed_distance(Vec2(g.xf(i), g.yc(j))) * co.v.u(i, j)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i)
      if (co.v.v(i, j) != 0)
        sdv = std::max(sdv, std::abs(body.signed_distance(Vec2(g.xc(i), g.yf(j))) * co.v.v(i, j)));
  out.sup_dv = sdv;
  return out;
}

/// H-norm of the centered time difference (hi - lo) / dt of two correctors
/// built from states a time step apart on the same grid and strip.
inline Real corrector_time_difference_norm(const Corrector& lo, const Corrector& hi, Real dt,
                                           const BodyGeometry& body) {
  if (lo.grid.n != hi.grid.n || lo.c != hi.c || lo.nu != hi.nu)
    throw std::invalid_argument("corrector time difference: mismatched family members");
  MacVel diff(lo.grid);
  diff.u = (hi.v.u - lo.v.u) / dt;
  diff.v = (hi.v.v - lo.v.v) / dt;
  return std::sqrt(2 * mac_kinetic_energy(lo.grid, diff, face_density(lo.grid, body)));
}

struct CorrectorScalings {
  Real sup_v = 0, h_norm = 0, dt_h_norm = 0, grad_strip = 0, sup_dv = 0;
};

/// Log-log least-squares slopes of each norm against viscosity.
inline CorrectorScalings corrector_scalings(const std::vector<Real>& nus,
                                            const std::vector<CorrectorNorms>& norms) {
  if (nus.size() < 4)
    throw std::invalid_argument("corrector scalings: at least 4 viscosities required");
  if (nus.size() != norms.size())
    throw std::invalid_argument("corrector scalings: size mismatch");
  for (size_t k = 1; k < nus.size(); ++k)
    if (!(nus[k] < nus[k - 1]))
      throw std::invalid_argument("corrector scalings: viscosities must strictly decrease");
  auto slope = [&](auto pick) {
    Real sx = 0, sy = 0, sxx = 0, sxy = 0;
    const Real m = Real(nus.size());
    for (size_t k = 0; k < nus.size(); ++k) {
      Real x = std::log(nus[k]);
      Real y = std::log(std::max(pick(norms[k]), Real(1e-300)));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  CorrectorScalings s;
  s.sup_v = slope([](const CorrectorNorms& c) { return c.sup_v; });
  s.h_norm = slope([](const CorrectorNorms& c) { return c.h_norm; });
  s.dt_h_norm = slope([](const CorrectorNorms& c) { return c.dt_h_norm; });
  s.grad_strip = slope([](const CorrectorNorms& c) { return c.grad_strip; });
  s.sup_dv = slope([](const CorrectorNorms& c) { return c.sup_dv; });
  return s;
}

// =========================================================================
// Corrected comparison field
// =========================================================================

/// u - v with the rigid extension enforced in the deep interior.  The result
/// stays in the energy space: divergence-free, rigid inside the body, and
/// continuous across the surface up to an O(h) tangential gap.
inline MacVel corrected_test_field(const Grid& g, const MacVel& u, const BodyState& bs,
                                   const BodyGeometry& body, const Corrector& co) {
  if (co.grid.n != g.n || co.grid.L != g.L)
    throw std::invalid_argument("corrected field: state and corrector grids differ");
  MacVel w(g);
  w.u = u.u - co.v.u;
  w.v = u.v - co.v.v;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i)
      if (body.signed_distance(Vec2(g.xf(i), g.yc(j))) < -g.h)
        w.u(i, j) = bs.solid_velocity_at(Vec2(g.xf(i), g.yc(j))).x();
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (body.signed_distance(Vec2(g.xc(i), g.yf(j))) < -g.h)
        w.v(i, j) = bs.solid_velocity_at(Vec2(g.xc(i), g.yf(j))).y();
  return w;
}

/// Fluid-side trace by quadratic extrapolation from offsets h, 2h, 3h.  The
/// strip profile is quadratic in distance, so a quadratic fit recovers the
/// surface limit exactly; linear extrapolation would leave an O(1) profile
/// curvature error when the strip is a fixed number of cells wide.
inline Vec2 fluid_side_trace(const Grid& g, const MacVel& w, const Vec2& x, const Vec2& normal) {
  Vec2 u1 = mac_sample(g, w, x.x() + g.h * normal.x(), x.y() + g.h * normal.y());
  Vec2 u2 = mac_sample(g, w, x.x() + 2 * g.h * normal.x(), x.y() + 2 * g.h * normal.y());
  Vec2 u3 = mac_sample(g, w, x.x() + 3 * g.h * normal.x(), x.y() + 3 * g.h * normal.y());
  return 3 * u1 - 3 * u2 + u3;
}

/// Sup over the first clean fluid-side face layer (centers between h/2 and
/// 3h/2 from the surface) of the difference between face values and a target
/// boundary field, componentwise.  Face values are compared directly; any
/// interpolation at this distance would mix across the interface jump.
inline Real interface_gap(const Grid& g, const MacVel& w, const BodyGeometry& body,
                          const std::function<Vec2(const Vec2&)>& target) {
  Real worst = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Vec2 x(g.xf(i), g.yc(j));
      Real d = body.signed_distance(x);
      if (d > Real(0.5) * g.h && d < Real(1.5) * g.h)
        worst = std::max(worst, std::abs(w.u(i, j) - target(x).x()));
    }
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Vec2 x(g.xc(i), g.yf(j));
      Real d = body.signed_distance(x);
      if (d > Real(0.5) * g.h && d < Real(1.5) * g.h)
        worst = std::max(worst, std::abs(w.v(i, j) - target(x).y()));
    }
  return worst;
}

/// Interface jump of a corrected field against the rigid body motion.
inline Real tangential_trace_gap(const Grid& g, const MacVel& w, const BodyState& bs,
                                 const BodyGeometry& body) {
  return interface_gap(g, w, body, [&bs](const Vec2& x) { return bs.solid_velocity_at(x); });
}

/// 0/1 mask of cells whose centers lie in the fluid-side strip of the given
/// width; shared by the strip dissipation quadratures.
inline Eigen::ArrayXXd strip_mask(const Grid& g, const BodyGeometry& body, Real width) {
  Eigen::ArrayXXd m = Eigen::ArrayXXd::Zero(g.n, g.n);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real d = body.signed_distance(Vec2(g.xc(i), g.yc(j)));
      if (d > 0 && d < width) m(i, j) = 1;
    }
  return m;
}

}  // namespace kfsi
