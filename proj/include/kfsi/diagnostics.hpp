#pragma once

/// @file diagnostics.hpp
/// @brief Post-processing for the vanishing-viscosity comparison: strip
///        dissipation ledgers recomputed from stored samples, energy-norm
///        and weak-pairing distances to a reference flow, the five
///        remainder functionals of the comparison identity (with their
///        redundant cross-check evaluations), a Hardy-quotient stability
///        probe, and sweep-level report assembly with CSV/JSON emission.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfsi/corrector.hpp"
#include "kfsi/geometry.hpp"
#include "kfsi/mac.hpp"
#include "kfsi/ns_solver.hpp"

namespace kfsi {

// =========================================================================
// Combined-metric elements
// =========================================================================

/// Element of the combined velocity space: a face field for the fluid part
/// plus the rigid degrees of freedom.  Faces inside the body are ignored by
/// the metric; the body contributes exactly m l.l' + J r r'.  Fields that
/// differ only in the body velocity therefore have distance sqrt(m)|dl|
/// with the analytic mass, not a staircase approximation of it.
struct HField {
  MacVel w;
  Vec2 ell = Vec2::Zero();
  Real r = 0;
  HField() = default;
  explicit HField(const Grid& g) : w(g) {}
};

class HMetric {
 public:
  HMetric(const Grid& g, const BodyGeometry& body)
      : g_(g), rho_(face_density(g, body)), mass_(body.mass()), inertia_(body.inertia()) {}

  Real dot(const HField& a, const HField& b) const {
    Real fluid = (((1 - rho_.chix) * a.w.u * b.w.u).sum() +
                  ((1 - rho_.chiy) * a.w.v * b.w.v).sum()) *
                 g_.h * g_.h;
    return fluid + mass_ * a.ell.dot(b.ell) + inertia_ * a.r * b.r;
  }
  Real norm(const HField& a) const { return std::sqrt(std::max(Real(0), dot(a, a))); }
  const Grid& grid() const { return g_; }

 private:
  Grid g_;
  FaceRho rho_;
  Real mass_, inertia_;
};

// =========================================================================
// Reference samplers
// =========================================================================

/// Produces the reference flow at a requested time on the shared grid.
/// Returns true when the value came from a stored sample without time
/// interpolation.
using ReferenceAt = std::function<bool(Real t, MacVel& w, BodyState& b)>;

/// Piecewise-linear-in-time view of a stored trajectory.  The trajectory
/// must outlive the returned callback.  Requests outside the covered time
/// range throw.
inline ReferenceAt trajectory_interpolant(const Trajectory& tr) {
  if (tr.states.empty()) throw std::invalid_argument("trajectory_interpolant: empty trajectory");
  return [&tr](Real t, MacVel& w, BodyState& b) -> bool {
    const Real tol = 1e-9;
    const auto& st = tr.states;
    if (t < st.front().t - tol || t > st.back().t + tol)
      throw std::invalid_argument("reference trajectory does not cover the requested time");
    size_t k = 0;
    while (k + 1 < st.size() && st[k + 1].t <= t) ++k;
    if (std::abs(st[k].t - t) <= tol || k + 1 >= st.size()) {
      w = st[k].w;
      b = st[k].body;
      return true;
    }
    const NSState& lo = st[k];
    const NSState& hi = st[k + 1];
    if (std::abs(hi.t - t) <= tol) {
      w = hi.w;
      b = hi.body;
      return true;
    }
    Real th = (t - lo.t) / (hi.t - lo.t);
    w = lo.w;
    w.u = (1 - th) * lo.w.u + th * hi.w.u;
    w.v = (1 - th) * lo.w.v + th * hi.w.v;
    b = lo.body;
    b.ell = (1 - th) * lo.body.ell + th * hi.body.ell;
    b.r = (1 - th) * lo.body.r + th * hi.body.r;
    b.h = (1 - th) * lo.body.h + th * hi.body.h;
    b.theta = (1 - th) * lo.body.theta + th * hi.body.theta;
    return false;
  };
}

// =========================================================================
// Strip dissipation ledgers
// =========================================================================

enum class StripKind { deform, curl, grad };

/// Time-trapezoid, strip-masked quadrature of the chosen squared gradient
/// part times the viscosity, recomputed from the stored samples.  Cell
/// convention matches the solver ledger: |D|^2, |W|^2 = omega^2/2, and
/// their sum for the full gradient.
inline Real strip_dissipation(const Trajectory& traj, const Grid& g, const BodyGeometry& body,
                              const StripSpec& spec, StripKind kind,
                              BoxBC bc = BoxBC::dirichlet) {
  if (spec.width() < 2 * g.h)
    throw std::invalid_argument("strip_dissipation: strip narrower than two cells on this grid");
  StripMask mask = strip_mask(g, body, spec);
  const Real h2 = g.h * g.h;
  auto rate = [&](const NSState& s) {
    MacDissipationMaps m = mac_dissipation_maps(g, s.w, bc);
    const Eigen::ArrayXXd& pick = (kind == StripKind::deform) ? m.deform_sq
                                  : (kind == StripKind::curl) ? m.asym_sq
                                                              : m.grad_sq;
    return (pick * mask.indicator.data()).sum() * h2;
  };
  if (traj.states.size() < 2) return 0;
  Real acc = 0;
  Real prev = rate(traj.states[0]);
  for (size_t k = 1; k < traj.states.size(); ++k) {
    Real cur = rate(traj.states[k]);
    acc += Real(0.5) * (prev + cur) * (traj.states[k].t - traj.states[k - 1].t);
    prev = cur;
  }
  return spec.nu * acc;
}

// =========================================================================
// Distances to the reference flow
// =========================================================================

struct EnergyDistance {
  Real sup = 0;
  std::vector<Real> times, values;
  bool interpolated = false;  // reference required time interpolation
};

/// sup over the stored samples of the combined-metric distance to the
/// reference, with the per-time series alongside.
inline EnergyDistance energy_distance(const Trajectory& ns, const ReferenceAt& reference,
                                      const HMetric& metric) {
  if (ns.states.empty()) throw std::invalid_argument("energy_distance: empty trajectory");
  const Grid& g = metric.grid();
  EnergyDistance out;
  MacVel ew(g);
  BodyState eb;
  HField diff(g);
  for (const NSState& s : ns.states) {
    bool exact = reference(s.t, ew, eb);
    out.interpolated = out.interpolated || !exact;
    diff.w.u = s.w.u - ew.u;
    diff.w.v = s.w.v - ew.v;
    diff.ell = s.body.ell - eb.ell;
    diff.r = s.body.r - eb.r;
    Real v = metric.norm(diff);
    out.times.push_back(s.t);
    out.values.push_back(v);
    out.sup = std::max(out.sup, v);
  }
  return out;
}

// =========================================================================
// Localized rigid extensions and the pairing dictionary
// =========================================================================

namespace detail {

/// Discrete curl of a node potential: exactly divergence free on the faces.
inline MacVel node_curl(const Grid& g, const Eigen::ArrayXXd& phi) {
  MacVel w(g);
  const Real ih = 1 / g.h;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i <= g.n; ++i) w.u(i, j) = (phi(i, j + 1) - phi(i, j)) * ih;
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i < g.n; ++i) w.v(i, j) = -(phi(i + 1, j) - phi(i, j)) * ih;
  return w;
}

}  // namespace detail

/// Stream potential whose curl under the convention u = (d/dy, -d/dx) psi
/// is the rigid velocity ell + r x-perp.
inline Real rigid_stream(const Vec2& x, const Vec2& ell, Real r) {
  return cross2(ell, x) - Real(0.5) * r * x.squaredNorm();
}

/// Divergence-free localized extension of a rigid velocity: discrete curl
/// of chi * psi where chi is 1 out to `width` from the body (and inside
/// it) and falls to zero by twice that distance.  Because centered node
/// differences are exact on quadratics, the field equals the rigid motion
/// to round-off on every face whose node stencil stays inside the chi = 1
/// region.
struct RigidExtension {
  MacVel u;
  Vec2 ell = Vec2::Zero();
  Real r = 0;
  Real inner_width = 0;
  RigidExtension() = default;
  explicit RigidExtension(const Grid& g) : u(g) {}
};

inline RigidExtension build_rigid_extension(const Grid& g, const BodyGeometry& body,
                                            const Vec2& ell, Real r, Real width,
                                            XiProfile profile = XiProfile::quadratic) {
  if (width <= 0) throw std::invalid_argument("build_rigid_extension: width must be positive");
  Eigen::ArrayXXd phi(g.n + 1, g.n + 1);
  for (int j = 0; j <= g.n; ++j)
    for (int i = 0; i <= g.n; ++i) {
      Vec2 x(g.xf(i), g.yf(j));
      Real chi = xi_value(profile, (body.signed_distance(x) - width) / width);
      phi(i, j) = chi == 0 ? Real(0) : chi * rigid_stream(x, ell, r);
    }
  RigidExtension ext(g);
  ext.u = detail::node_curl(g, phi);
  ext.ell = ell;
  ext.r = r;
  ext.inner_width = width;
  return ext;
}

struct PairingField {
  std::string name;
  HField f;
  Real h_norm = 0;
};

/// Fixed pairing dictionary: twelve compactly supported vortex blobs
/// (three radii, four bearings) clear of both the body and the walls, plus
/// two localized rigid-motion extensions anchored at the body.  Every
/// entry is an exact discrete curl, hence divergence free on the faces.
inline std::vector<PairingField> weak_dictionary(const Grid& g, const BodyGeometry& body,
                                              const HMetric& metric) {
  Real a = body.radius();
  Real reach = Real(0.85) * g.L - a;
  if (reach <= 0) throw std::invalid_argument("weak_dictionary: body fills the box");
  std::vector<PairingField> dict;
  Real sigma = Real(0.12) * reach;
  for (int ri = 0; ri < 3; ++ri) {
    Real rad = a + Real(0.25) * (ri + 1) * reach;
    for (int ai = 0; ai < 4; ++ai) {
      Real ang = Real(0.5) * kPi * ai;
      Vec2 c(rad * std::cos(ang), rad * std::sin(ang));
      Eigen::ArrayXXd phi = Eigen::ArrayXXd::Zero(g.n + 1, g.n + 1);
      for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i <= g.n; ++i) {
          Real rr = (Vec2(g.xf(i), g.yf(j)) - c).squaredNorm() / (sigma * sigma);
          if (rr < 1) {
            Real q = 1 - rr;
            phi(i, j) = sigma * q * q * q;
          }
        }
      PairingField tf;
      tf.name = "blob_r" + std::to_string(ri) + "_b" + std::to_string(ai);
      tf.f.w = detail::node_curl(g, phi);
      tf.h_norm = metric.norm(tf.f);
      dict.push_back(std::move(tf));
    }
  }
  Real w = Real(0.3) * reach;
  for (int k = 0; k < 2; ++k) {
    RigidExtension ext =
        build_rigid_extension(g, body, k == 0 ? Vec2(1, 0) : Vec2(0, 0), k == 0 ? 0 : 1, w);
    PairingField tf;
    tf.name = k == 0 ? "near_body_translation" : "near_body_rotation";
    tf.f.w = ext.u;
    tf.f.ell = ext.ell;
    tf.f.r = ext.r;
    tf.h_norm = metric.norm(tf.f);
    dict.push_back(std::move(tf));
  }
  return dict;
}

struct WeakGaps {
  std::vector<Real> times;
  Eigen::MatrixXd gaps;  // one row per stored sample, one column per entry
  Real max_gap = 0;
  bool interpolated = false;
};

/// |(u - reference, v_k)| in the combined metric for every stored sample
/// and dictionary entry: a finite surrogate for pairwise weak convergence.
/// Every entry is bounded by the energy distance times the entry's norm,
/// exactly, by Cauchy-Schwarz in the same discrete inner product.
inline WeakGaps weak_gap(const Trajectory& ns, const ReferenceAt& reference,
                         const HMetric& metric, const std::vector<PairingField>& dict) {
  if (ns.states.empty()) throw std::invalid_argument("weak_gap: empty trajectory");
  const Grid& g = metric.grid();
  WeakGaps out;
  out.gaps.resize(static_cast<Eigen::Index>(ns.states.size()),
                  static_cast<Eigen::Index>(dict.size()));
  MacVel ew(g);
  BodyState eb;
  HField diff(g);
  for (size_t k = 0; k < ns.states.size(); ++k) {
    const NSState& s = ns.states[k];
    bool exact = reference(s.t, ew, eb);
    out.interpolated = out.interpolated || !exact;
    diff.w.u = s.w.u - ew.u;
    diff.w.v = s.w.v - ew.v;
    diff.ell = s.body.ell - eb.ell;
    diff.r = s.body.r - eb.r;
    out.times.push_back(s.t);
    for (size_t q = 0; q < dict.size(); ++q) {
      Real gap = std::abs(metric.dot(diff, dict[q].f));
      out.gaps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(q)) = gap;
      out.max_gap = std::max(out.max_gap, gap);
    }
  }
  return out;
}

// =========================================================================
// Center collocation helpers
// =========================================================================

namespace detail {

struct CenterVec {
  Eigen::ArrayXXd x, y;  // n x n
};

inline CenterVec center_components(const Grid& g, const MacVel& w) {
  CenterVec c;
  c.x.resize(g.n, g.n);
  c.y.resize(g.n, g.n);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      c.x(i, j) = Real(0.5) * (w.u(i, j) + w.u(i + 1, j));
      c.y(i, j) = Real(0.5) * (w.v(i, j) + w.v(i, j + 1));
    }
  return c;
}

/// Full velocity gradient collocated at the centers; cross derivatives
/// average the four surrounding corner stencils (zero at the box edge,
/// which the strip-masked quadratures never touch).
struct CenterGrad {
  Eigen::ArrayXXd xx, xy, yx, yy;  // d/dx wx, d/dy wx, d/dx wy, d/dy wy
};

inline CenterGrad center_gradients(const Grid& g, const MacVel& w) {
  const int n = g.n;
  const Real ih = 1 / g.h;
  Eigen::ArrayXXd dudy = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  Eigen::ArrayXXd dvdx = Eigen::ArrayXXd::Zero(n + 1, n + 1);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i <= n; ++i) dudy(i, j) = (w.u(i, j) - w.u(i, j - 1)) * ih;
  for (int j = 0; j <= n; ++j)
    for (int i = 1; i < n; ++i) dvdx(i, j) = (w.v(i, j) - w.v(i - 1, j)) * ih;
  CenterGrad gr;
  gr.xx.resize(n, n);
  gr.xy.resize(n, n);
  gr.yx.resize(n, n);
  gr.yy.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      gr.xx(i, j) = (w.u(i + 1, j) - w.u(i, j)) * ih;
      gr.yy(i, j) = (w.v(i, j + 1) - w.v(i, j)) * ih;
      gr.xy(i, j) =
          Real(0.25) * (dudy(i, j) + dudy(i + 1, j) + dudy(i, j + 1) + dudy(i + 1, j + 1));
      gr.yx(i, j) =
          Real(0.25) * (dvdx(i, j) + dvdx(i + 1, j) + dvdx(i, j + 1) + dvdx(i + 1, j + 1));
    }
  return gr;
}

struct CenterDeform {
  Eigen::ArrayXXd d11, d22, d12;  // n x n
};

inline CenterDeform center_deformation(const Grid& g, const MacVel& w, BoxBC bc) {
  MacDeform d = mac_deformation(g, w, bc);
  CenterDeform c;
  c.d11 = d.d11;
  c.d22 = d.d22;
  c.d12.resize(g.n, g.n);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      c.d12(i, j) =
          Real(0.25) * (d.d12(i, j) + d.d12(i + 1, j) + d.d12(i, j + 1) + d.d12(i + 1, j + 1));
  return c;
}

}  // namespace detail

// =========================================================================
// Remainder functionals
// =========================================================================

/// The five remainder functionals of the comparison identity at one time,
/// plus the two redundant evaluations used as numerical cross-checks.
struct Remainders {
  Real r1 = 0, r2 = 0, r3 = 0, r4 = 0, r5 = 0;
  Real r1_dual = 0;  // distance-weighted rewriting 2 int d v . (D(u) tau)
  Real r3_alt = 0;   // same discrete sum accumulated independently
};

/// Masked quadratures at the stored sample: the strip carries every term
/// except the third, which runs over the whole fluid.  `reference_w` is
/// the reference velocity on the same grid; `ext` must blanket the strip
/// with its rigid region (used by the rewriting of the first term).
inline Remainders remainders(const Grid& g, const NSState& s, const MacVel& reference_w,
                             const Corrector& co, const RigidExtension& ext,
                             const BodyGeometry& body, Real nu, BoxBC bc = BoxBC::dirichlet) {
  if (co.grid.n != g.n) throw std::invalid_argument("remainders: corrector grid mismatch");
  if (co.nu != nu) throw std::invalid_argument("remainders: corrector viscosity mismatch");
  const Real width = co.c * co.nu;
  if (ext.inner_width < width - 1e-12)
    throw std::invalid_argument("remainders: rigid extension narrower than the strip");
  const Real h2 = g.h * g.h;

  detail::CenterVec un = detail::center_components(g, s.w);
  detail::CenterVec us = detail::center_components(g, mac_rigid(g, s.body.ell, s.body.r));
  detail::CenterVec ut = detail::center_components(g, ext.u);
  detail::CenterVec vf = detail::center_components(g, co.v);
  detail::CenterGrad gv = detail::center_gradients(g, co.v);
  detail::CenterDeform du = detail::center_deformation(g, s.w, bc);
  detail::CenterDeform dv = detail::center_deformation(g, co.v, bc);
  // The reference field slips along the box walls, so its deformation takes
  // the mirror closure there; a no-slip ghost would inject O(1/h) noise into
  // the wall rows and pollute the third functional.
  detail::CenterDeform de = detail::center_deformation(g, reference_w, BoxBC::freeslip);

  Remainders out;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real d = body.signed_distance(g.center(i, j));
      if (d <= 0) continue;
      out.r3 += nu * 2 *
                (du.d11(i, j) * de.d11(i, j) + du.d22(i, j) * de.d22(i, j) +
                 2 * du.d12(i, j) * de.d12(i, j)) *
                h2;
      if (d >= width) continue;
      Vec2 u(un.x(i, j), un.y(i, j));
      Vec2 uS(us.x(i, j), us.y(i, j));
      Vec2 v(vf.x(i, j), vf.y(i, j));
      Vec2 rel = u - uS;
      Vec2 adv(rel.x() * gv.xx(i, j) + rel.y() * gv.xy(i, j),
               rel.x() * gv.yx(i, j) + rel.y() * gv.yy(i, j));
      out.r1 -= rel.dot(adv) * h2;
      out.r2 -= uS.dot(adv) * h2;
      out.r4 -= 2 * nu *
                (du.d11(i, j) * dv.d11(i, j) + du.d22(i, j) * dv.d22(i, j) +
                 2 * du.d12(i, j) * dv.d12(i, j)) *
                h2;
      out.r5 -= s.body.r * cross2(u, v) * h2;
      Vec2 tau = (u - Vec2(ut.x(i, j), ut.y(i, j))) / d;
      Vec2 dtau(du.d11(i, j) * tau.x() + du.d12(i, j) * tau.y(),
                du.d12(i, j) * tau.x() + du.d22(i, j) * tau.y());
      out.r1_dual += 2 * d * v.dot(dtau) * h2;
    }
  // Independent reverse-order accumulation of the identical discrete sum:
  // agreement is a pure round-off statement about the quadrature code.
  Real rev = 0;
  for (int j = g.n - 1; j >= 0; --j)
    for (int i = g.n - 1; i >= 0; --i) {
      if (body.signed_distance(g.center(i, j)) <= 0) continue;
      rev += nu * 2 *
             (du.d11(i, j) * de.d11(i, j) + du.d22(i, j) * de.d22(i, j) +
              2 * du.d12(i, j) * de.d12(i, j)) *
             h2;
    }
  out.r3_alt = rev;
  return out;
}

struct RemainderSeries {
  std::vector<Real> times;
  std::vector<Remainders> at;
  std::array<Real, 5> integrals{};  // time-trapezoid of the five terms
  Real dual_gap_rel = 0;            // worst |r1 - r1_dual| over the r1 scale
  Real r3_pair_gap = 0;             // worst |r3 - r3_alt|
  bool interpolated = false;
};

/// Evaluates the remainder functionals at every stored sample, rebuilding
/// the strip field and the rigid extension at each time, and accumulates
/// the time integrals.  `c` is the strip constant: the extension's rigid
/// region spans distance c, blanketing every strip of width c*nu for
/// nu <= 1.
inline RemainderSeries remainder_series(const Trajectory& ns, const Grid& g,
                                        const BodyGeometry& body, Real nu, Real c,
                                        const ReferenceAt& reference,
                                        const std::function<Corrector(Real)>& corrector_at,
                                        BoxBC bc = BoxBC::dirichlet) {
  if (ns.states.empty()) throw std::invalid_argument("remainder_series: empty trajectory");
  RemainderSeries out;
  MacVel ew(g);
  BodyState eb;
  Real scale = 0;
  for (const NSState& s : ns.states) {
    bool exact = reference(s.t, ew, eb);
    out.interpolated = out.interpolated || !exact;
    Corrector co = corrector_at(s.t);
    RigidExtension ext = build_rigid_extension(g, body, s.body.ell, s.body.r, c);
    Remainders r = remainders(g, s, ew, co, ext, body, nu, bc);
    out.times.push_back(s.t);
    out.at.push_back(r);
    scale = std::max(scale, std::abs(r.r1));
    out.r3_pair_gap = std::max(out.r3_pair_gap, std::abs(r.r3 - r.r3_alt));
  }
  for (size_t k = 1; k < out.times.size(); ++k) {
    Real dt = out.times[k] - out.times[k - 1];
    const Remainders& A = out.at[k - 1];
    const Remainders& B = out.at[k];
    out.integrals[0] += Real(0.5) * (A.r1 + B.r1) * dt;
    out.integrals[1] += Real(0.5) * (A.r2 + B.r2) * dt;
    out.integrals[2] += Real(0.5) * (A.r3 + B.r3) * dt;
    out.integrals[3] += Real(0.5) * (A.r4 + B.r4) * dt;
    out.integrals[4] += Real(0.5) * (A.r5 + B.r5) * dt;
  }
  Real worst = 0;
  for (const Remainders& r : out.at) worst = std::max(worst, std::abs(r.r1 - r.r1_dual));
  out.dual_gap_rel = scale > 0 ? worst / scale : worst;
  return out;
}

// =========================================================================
// Hardy quotient
// =========================================================================

/// || (u - extension)/d ||_{L2(strip)} over || grad(u - extension) ||_{L2(fluid)}.
/// The numerator skips cells whose center sits closer to the interface
/// than half a cell: a midpoint quadrature cannot represent the 1/d weight
/// there.  Returns 0 under the guard when the denominator vanishes.
inline Real hardy_ratio(const Grid& g, const NSState& s, const BodyGeometry& body,
                        const RigidExtension& ext, const StripSpec& strip,
                        BoxBC bc = BoxBC::dirichlet) {
  MacVel diff = s.w;
  diff.u = s.w.u - ext.u.u;
  diff.v = s.w.v - ext.u.v;
  MacDissipationMaps m = mac_dissipation_maps(g, diff, bc);
  detail::CenterVec dc = detail::center_components(g, diff);
  const Real h2 = g.h * g.h;
  const Real width = strip.width();
  Real num = 0, den = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real d = body.signed_distance(g.center(i, j));
      if (d <= 0) continue;
      den += m.grad_sq(i, j) * h2;
      if (d > Real(0.5) * g.h && d < width)
        num += (dc.x(i, j) * dc.x(i, j) + dc.y(i, j) * dc.y(i, j)) / (d * d) * h2;
    }
  Real dn = std::sqrt(den);
  if (dn < 1e-14) return 0;
  return std::sqrt(num) / dn;
}

// =========================================================================
// Sweep report
// =========================================================================

struct SweepRow {
  Real nu = 0;
  Real strip_deform = 0, strip_curl = 0, strip_grad = 0, total_deform = 0;
  Real energy_distance = 0, weak_gap_max = 0;
  std::array<Real, 5> r_integrals{};
  Real hardy_max = 0;
};

struct ReportExponents {
  Real strip_deform = 0, strip_curl = 0, strip_grad = 0, total_deform = 0;
  Real energy_distance = 0, weak_gap_max = 0;
  std::array<Real, 5> r_abs{};  // fits of |time integral| of each term
};

/// Assembled sweep: the table itself, log-log fitted viscosity exponents,
/// the pairwise rank correlations among the three strip ledgers and the
/// energy distance, and the necessity cross-check (a decreasing energy
/// distance must come with a decreasing total deformation ledger).
struct DiagnosticsReport {
  std::vector<SweepRow> rows;
  ReportExponents exponents;
  Eigen::Matrix4d spearman = Eigen::Matrix4d::Zero();
  bool necessity_ok = true;
};

namespace detail {

inline Real loglog_slope(const std::vector<Real>& xs, const std::vector<Real>& ys) {
  const Real n = static_cast<Real>(xs.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    Real lx = std::log(std::max(xs[k], Real(1e-300)));
    Real ly = std::log(std::max(ys[k], Real(1e-300)));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  Real denom = n * sxx - sx * sx;
  return denom == 0 ? 0 : (n * sxy - sx * sy) / denom;
}

inline std::vector<Real> ranks(const std::vector<Real>& v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), size_t(0));
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<Real> rk(v.size());
  size_t k = 0;
  while (k < idx.size()) {
    size_t j = k;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[k]]) ++j;
    Real avg = Real(k + j) / 2 + 1;
    for (size_t q = k; q <= j; ++q) rk[idx[q]] = avg;
    k = j + 1;
  }
  return rk;
}

inline Real spearman(const std::vector<Real>& a, const std::vector<Real>& b) {
  std::vector<Real> ra = ranks(a), rb = ranks(b);
  const size_t n = ra.size();
  Real ma = 0, mb = 0;
  for (size_t k = 0; k < n; ++k) {
    ma += ra[k];
    mb += rb[k];
  }
  ma /= static_cast<Real>(n);
  mb /= static_cast<Real>(n);
  Real num = 0, va = 0, vb = 0;
  for (size_t k = 0; k < n; ++k) {
    num += (ra[k] - ma) * (rb[k] - mb);
    va += (ra[k] - ma) * (ra[k] - ma);
    vb += (rb[k] - mb) * (rb[k] - mb);
  }
  Real den = std::sqrt(va * vb);
  return den == 0 ? 0 : num / den;
}

}  // namespace detail

inline DiagnosticsReport convergence_report(const std::vector<SweepRow>& rows) {
  if (rows.size() < 4)
    throw std::invalid_argument(
        "convergence_report: need at least four viscosities; no extrapolation from fewer");
  for (size_t k = 0; k < rows.size(); ++k) {
    const SweepRow& r = rows[k];
    if (k > 0 && !(r.nu < rows[k - 1].nu))
      throw std::invalid_argument("convergence_report: viscosities must be strictly decreasing");
    if (r.strip_deform < 0 || r.strip_curl < 0 || r.strip_grad < 0 || r.total_deform < 0 ||
        r.energy_distance < 0)
      throw std::invalid_argument(
          "convergence_report: dissipation and distance entries must be nonnegative");
  }
  DiagnosticsReport rep;
  rep.rows = rows;
  auto col = [&](auto pick) {
    std::vector<Real> v;
    for (const SweepRow& r : rows) v.push_back(pick(r));
    return v;
  };
  std::vector<Real> nus = col([](const SweepRow& r) { return r.nu; });
  std::vector<Real> sd = col([](const SweepRow& r) { return r.strip_deform; });
  std::vector<Real> sc = col([](const SweepRow& r) { return r.strip_curl; });
  std::vector<Real> sg = col([](const SweepRow& r) { return r.strip_grad; });
  std::vector<Real> td = col([](const SweepRow& r) { return r.total_deform; });
  std::vector<Real> ed = col([](const SweepRow& r) { return r.energy_distance; });
  std::vector<Real> wg = col([](const SweepRow& r) { return r.weak_gap_max; });
  rep.exponents.strip_deform = detail::loglog_slope(nus, sd);
  rep.exponents.strip_curl = detail::loglog_slope(nus, sc);
  rep.exponents.strip_grad = detail::loglog_slope(nus, sg);
  rep.exponents.total_deform = detail::loglog_slope(nus, td);
  rep.exponents.energy_distance = detail::loglog_slope(nus, ed);
  rep.exponents.weak_gap_max = detail::loglog_slope(nus, wg);
  for (int q = 0; q < 5; ++q) {
    std::vector<Real> v;
    for (const SweepRow& r : rows) v.push_back(std::abs(r.r_integrals[static_cast<size_t>(q)]));
    rep.exponents.r_abs[static_cast<size_t>(q)] = detail::loglog_slope(nus, v);
  }
  std::array<const std::vector<Real>*, 4> quads = {&sd, &sc, &sg, &ed};
  for (int aq = 0; aq < 4; ++aq)
    for (int bq = 0; bq < 4; ++bq)
      rep.spearman(aq, bq) = detail::spearman(*quads[static_cast<size_t>(aq)],
                                              *quads[static_cast<size_t>(bq)]);
  bool ed_dec = true, td_dec = true;
  for (size_t k = 1; k < rows.size(); ++k) {
    ed_dec = ed_dec && rows[k].energy_distance < rows[k - 1].energy_distance;
    td_dec = td_dec && rows[k].total_deform < rows[k - 1].total_deform;
  }
  rep.necessity_ok = !ed_dec || td_dec;
  return rep;
}

inline std::string report_csv(const DiagnosticsReport& rep) {
  std::string out =
      "nu,strip_deform,strip_curl,strip_grad,total_deform,energy_distance,weak_gap_max,"
      "R1_integral,R2_integral,R3_integral,R4_integral,R5_integral,hardy_max\n";
  char buf[64];
  auto put = [&](Real v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out += buf;
  };
  for (const SweepRow& r : rep.rows) {
    put(r.nu, ',');
    put(r.strip_deform, ',');
    put(r.strip_curl, ',');
    put(r.strip_grad, ',');
    put(r.total_deform, ',');
    put(r.energy_distance, ',');
    put(r.weak_gap_max, ',');
    for (int q = 0; q < 5; ++q) put(r.r_integrals[static_cast<size_t>(q)], ',');
    put(r.hardy_max, '\n');
  }
  return out;
}

inline std::string report_json(const DiagnosticsReport& rep) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const SweepRow& r : rep.rows) {
    nlohmann::json row;
    row["nu"] = r.nu;
    row["strip_deform"] = r.strip_deform;
    row["strip_curl"] = r.strip_curl;
    row["strip_grad"] = r.strip_grad;
    row["total_deform"] = r.total_deform;
    row["energy_distance"] = r.energy_distance;
    row["weak_gap_max"] = r.weak_gap_max;
    row["R_integrals"] = r.r_integrals;
    row["hardy_max"] = r.hardy_max;
    j["rows"].push_back(row);
  }
  j["exponents"] = {{"strip_deform", rep.exponents.strip_deform},
                    {"strip_curl", rep.exponents.strip_curl},
                    {"strip_grad", rep.exponents.strip_grad},
                    {"total_deform", rep.exponents.total_deform},
                    {"energy_distance", rep.exponents.energy_distance},
                    {"weak_gap_max", rep.exponents.weak_gap_max},
                    {"R_abs", rep.exponents.r_abs}};
  std::array<std::array<Real, 4>, 4> sp{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) sp[static_cast<size_t>(a)][static_cast<size_t>(b)] = rep.spearman(a, b);
  j["spearman"] = {{"order", {"strip_deform", "strip_curl", "strip_grad", "energy_distance"}},
                   {"matrix", sp}};
  j["necessity_ok"] = rep.necessity_ok;
  return j.dump(2);
}

}  // namespace kfsi
