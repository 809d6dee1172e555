#pragma once

/// @file euler_reference.hpp
/// @brief Inviscid reference flow coupled to a rigid disk, in two tiers.
///
/// Tier 1 (`PotentialDiskFlow`) is the closed-form benchmark for a disk in an
/// unbounded ideal fluid: the body obeys the added-mass momentum balance
/// (m + pi a^2) dV/dt = (m - Vol) g in the lab frame, a disk feels no
/// pressure torque, and the fluid is the dipole potential field of the
/// instantaneous body velocity.  Everything (velocity, unsteady Bernoulli
/// pressure, work) is analytic, so this tier serves as the trusted oracle.
///
/// Tier 2 (`EulerSolver`) is a grid solver for the same body-frame equations
/// with zero viscosity.  It shares the staggered machinery with the viscous
/// solver but couples the body differently: only the wall-normal velocity is
/// constrained in a thin interior shell (the tangential component is free to
/// slip), a mollified full-rigid mask takes over deeper inside, and the body
/// momentum is advanced from surface-pressure quadratures rather than by
/// momentum exchange.  The pressure-force coupling is made implicit by a
/// short fixed-point iteration per step.

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "kfsi/geometry.hpp"
#include "kfsi/mac.hpp"
#include "kfsi/ns_solver.hpp"
#include "kfsi/poisson.hpp"
#include "kfsi/rigid_body.hpp"

namespace kfsi {

// =========================================================================
// Tier 1: closed-form potential flow for a translating (and freely
// spinning) disk in an unbounded fluid
// =========================================================================

struct PotentialFlowConfig {
  BodyGeometry body = BodyGeometry::disk(1.0, 2.0);
  Vec2 gravity = Vec2::Zero();  // lab frame
  Vec2 ell0 = Vec2::Zero();     // body-frame velocity at t = 0
  Real r0 = 0;                  // spin; a disk keeps it (zero pressure torque)
};

class PotentialDiskFlow {
 public:
  explicit PotentialDiskFlow(const PotentialFlowConfig& cfg) : cfg_(cfg) {
    if (cfg.body.shape() != BodyShape::Disk)
      throw std::invalid_argument("potential flow: disk geometry required");
    a_ = cfg.body.radius();
    A_ = kPi * a_ * a_;
    // lab-frame acceleration from the added-mass balance; constant in time
    accel_lab_ = (cfg.body.buoyant_mass() / (cfg.body.mass() + A_)) * cfg.gravity;
  }

  Real added_mass() const { return A_; }
  Vec2 lab_acceleration() const { return accel_lab_; }

  Real theta(Real t) const { return cfg_.r0 * t; }
  Vec2 lab_velocity(Real t) const { return cfg_.ell0 + t * accel_lab_; }
  Vec2 ell(Real t) const { return rotation2(-theta(t)) * lab_velocity(t); }

  BodyState body_state(Real t) const {
    BodyState b;
    b.ell = ell(t);
    b.r = cfg_.r0;
    b.theta = theta(t);
    b.h = t * cfg_.ell0 + Real(0.5) * t * t * accel_lab_;
    return b;
  }

  /// Body-frame velocity: the dipole of the instantaneous body velocity
  /// outside the disk, the rigid motion inside.
  Vec2 velocity(Real t, const Vec2& x) const {
    Real R = x.norm();
    Vec2 e = ell(t);
    if (R < a_) return e + cfg_.r0 * perp(x);
    Vec2 xh = x / R;
    return (a_ * a_ / (R * R)) * (2 * e.dot(xh) * xh - e);
  }

  /// Unsteady Bernoulli pressure transported to the body frame:
  /// p = ell . u - phi_t-part - |u|^2/2 + g_b . x, with the time derivative of
  /// the moving dipole expressed through the (body-frame) lab acceleration.
  /// Inside the disk the boundary value is continued radially.
  Real pressure(Real t, const Vec2& x) const {
    Real R = x.norm();
    Vec2 xe = x;
    if (R < Real(1e-14)) {
      xe = Vec2(a_, 0);
      R = a_;
    } else if (R < a_) {
      xe = (a_ / R) * x;
      R = a_;
    }
    Vec2 e = ell(t);
    Vec2 ub = velocity(t, xe);
    Mat2 Qt = rotation2(-theta(t));
    Vec2 alpha_b = Qt * accel_lab_;
    Vec2 gb = Qt * cfg_.gravity;
    return e.dot(ub) + (a_ * a_ / (R * R)) * alpha_b.dot(xe) - Real(0.5) * ub.squaredNorm() +
           gb.dot(xe);
  }

  /// Work of the weak-form gravity functional up to time t, in closed form
  /// (the rotational term vanishes for a centered disk):
  /// integral of m_a g . V(s) ds.
  Real work(Real t) const {
    return cfg_.body.buoyant_mass() *
           (cfg_.gravity.dot(cfg_.ell0) * t + Real(0.5) * t * t * cfg_.gravity.dot(accel_lab_));
  }

  /// Materialize the state on a grid (face samples, analytic pressure).
  NSState sample(const Grid& g, Real t) const {
    NSState s(g);
    s.t = t;
    s.body = body_state(t);
    s.w = mac_fill(g, [&](Real x, Real y) { return velocity(t, Vec2(x, y)); });
    s.p.fill([&](Real x, Real y) { return pressure(t, Vec2(x, y)); });
    return s;
  }

  /// Evenly sampled trajectory with grid kinetic energies and analytic work.
  Trajectory trajectory(const Grid& g, Real T, int samples) const {
    if (samples < 2) throw std::invalid_argument("trajectory: need at least 2 samples");
    FaceRho rho = face_density(g, cfg_.body);
    Trajectory traj;
    for (int k = 0; k < samples; ++k) {
      Real t = T * k / (samples - 1);
      NSState s = sample(g, t);
      EnergyLedgerRow row;
      row.t = t;
      row.kinetic = mac_kinetic_energy(g, s.w, rho);
      row.work = work(t);
      row.ell_x = s.body.ell.x();
      row.ell_y = s.body.ell.y();
      row.r = s.body.r;
      row.h_x = s.body.h.x();
      row.h_y = s.body.h.y();
      row.theta = s.body.theta;
      traj.states.push_back(std::move(s));
      traj.rows.push_back(row);
    }
    traj.kinetic0 = traj.rows.front().kinetic;
    traj.steps_taken = samples - 1;
    return traj;
  }

  const PotentialFlowConfig& config() const { return cfg_; }

 private:
  PotentialFlowConfig cfg_;
  Real a_ = 1, A_ = 0;
  Vec2 accel_lab_ = Vec2::Zero();
};

// =========================================================================
// Energy-equality residual (both tiers)
// =========================================================================

/// Per-sample residual of the kinetic-energy equality
/// KE(t) - KE(0) - W(t); for an inviscid flow this is zero in the continuum,
/// so the sampled value measures pure discretization error.
inline std::vector<Real> euler_energy_residual(const Trajectory& traj) {
  std::vector<Real> out;
  out.reserve(traj.rows.size());
  for (const auto& row : traj.rows)
    out.push_back(row.kinetic - traj.rows.front().kinetic - row.work);
  return out;
}

// =========================================================================
// Masked pressure solve: the body interior carries zero face conductivity,
// so the projection treats the (staircase) body as impermeable and never
// touches constrained faces.  Solved by conjugate gradients with the direct
// uniform solver as preconditioner.
// =========================================================================

class MaskedPoisson {
 public:
  MaskedPoisson(const Grid& g, const BodyGeometry& body) : g_(g), dct_(g) {
    const int n = g.n;
    wx_ = Eigen::ArrayXXd::Zero(n + 1, n);
    wy_ = Eigen::ArrayXXd::Zero(n, n + 1);
    for (int j = 0; j < n; ++j)
      for (int i = 1; i < n; ++i)
        wx_(i, j) = body.signed_distance(Vec2(g.xf(i), g.yc(j))) < 0 ? 0 : 1;
    for (int j = 1; j < n; ++j)
      for (int i = 0; i < n; ++i)
        wy_(i, j) = body.signed_distance(Vec2(g.xc(i), g.yf(j))) < 0 ? 0 : 1;
    active_ = Eigen::ArrayXXd::Zero(n, n);
    nactive_ = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Real s = wx_(i, j) + wx_(i + 1, j) + wy_(i, j) + wy_(i, j + 1);
        if (s > 0) {
          active_(i, j) = 1;
          ++nactive_;
        }
      }
  }

  const Eigen::ArrayXXd& face_mask_x() const { return wx_; }
  const Eigen::ArrayXXd& face_mask_y() const { return wy_; }

  ScalarField solve(const ScalarField& rhs, int* iters = nullptr, Real* resid = nullptr) const {
    const int n = g_.n;
    // compatibilize over the active (fluid) component; dead cells get
    // identity rows with zero data
    ScalarField b = rhs;
    Real mean = (b.data() * active_).sum() / nactive_;
    b.data() = -(b.data() - mean) * active_;  // A = -Lap, so flip the data
    ScalarField x(g_);
    x.data().setZero();
    ScalarField r = b, z(g_), p(g_), ap(g_);
    Real bn = std::sqrt((b.data() * b.data()).sum());
    if (bn == 0) {
      if (iters) *iters = 0;
      if (resid) *resid = 0;
      return x;
    }
    auto applyA = [&](const ScalarField& in, ScalarField& out) {
      const Real ih2 = 1 / (g_.h * g_.h);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          if (active_(i, j) == 0) {
            out(i, j) = in(i, j);
            continue;
          }
          Real acc = 0;
          if (i > 0 && wx_(i, j) > 0) acc += in(i - 1, j) - in(i, j);
          if (i + 1 < n && wx_(i + 1, j) > 0) acc += in(i + 1, j) - in(i, j);
          if (j > 0 && wy_(i, j) > 0) acc += in(i, j - 1) - in(i, j);
          if (j + 1 < n && wy_(i, j + 1) > 0) acc += in(i, j + 1) - in(i, j);
          out(i, j) = acc * ih2;
        }
      // the uniform solver returns -Lap^{-1}; keep A = -masked Laplacian so
      // the pair is positive definite together
      out.data() = -out.data();
    };
    auto precond = [&](const ScalarField& in, ScalarField& out) {
      ScalarField neg = in;
      neg.data() = -neg.data();
      out = dct_.solve(neg);
      out.data() = out.data() * active_ + in.data() * (1 - active_);
    };
    precond(r, z);
    p = z;
    Real rz = (r.data() * z.data()).sum();
    Real rn = bn;
    int it = 0;
    for (; it < 500; ++it) {
      rn = std::sqrt((r.data() * r.data()).sum());
      if (rn < 1e-11 * bn) break;
      applyA(p, ap);
      Real pap = (p.data() * ap.data()).sum();
      if (pap <= 0) break;
      Real alpha = rz / pap;
      x.data() += alpha * p.data();
      r.data() -= alpha * ap.data();
      precond(r, z);
      Real rzn = (r.data() * z.data()).sum();
      Real beta = rzn / rz;
      rz = rzn;
      p.data() = z.data() + beta * p.data();
    }
    if (iters) *iters = it;
    if (resid) *resid = rn / bn;
    return x;
  }

 private:
  Grid g_;
  DctPoisson dct_;
  Eigen::ArrayXXd wx_, wy_, active_;
  int nactive_ = 0;
};

// =========================================================================
// Tier 2: grid solver with slip coupling
// =========================================================================

struct EulerConfig {
  Grid grid{64, 1.0};
  BoxBC bc = BoxBC::freeslip;
  bool has_body = true;
  BodyGeometry body = BodyGeometry::disk(0.5, 2.0);
  Vec2 gravity = Vec2::Zero();
  Real cfl = 0.5;
  Real dt_max = 0.05;
  Real T = 1.0;
  int sample_stride = 8;
  bool frozen_body = false;
  Real shell_width = 3.0;  // interior normal-constraint shell, in units of h
  int picard = 3;          // fixed-point passes on the pressure-force coupling
  Vec2 ell0 = Vec2::Zero();
  Real r0 = 0;
  std::function<Vec2(Real, Real)> initial_velocity;
};

class EulerSolver {
 public:
  explicit EulerSolver(const EulerConfig& cfg)
      : cfg_(cfg),
        g_(cfg.grid),
        rho_(cfg.has_body ? face_density(g_, cfg.body) : face_density_uniform(g_)),
        poisson_(g_) {
    if (cfg_.has_body) {
      masked_ = std::make_unique<MaskedPoisson>(g_, cfg_.body);
      build_face_masks();
    }
  }

  const EulerConfig& config() const { return cfg_; }
  const FaceRho& face_rho() const { return rho_; }

  NSState initial_state() const {
    NSState s(g_);
    s.body.ell = cfg_.ell0;
    s.body.r = cfg_.r0;
    if (cfg_.initial_velocity) s.w = mac_fill(g_, cfg_.initial_velocity);
    if (cfg_.has_body) rigidify(s.w, s.body.ell, s.body.r);
    project(s.w, s.p, Real(1));
    return s;
  }

  Real cfl_dt(const NSState& s) const {
    MacVel rel = relative(s);
    Real sp = mac_max_speed(rel);
    Real dt_adv = cfg_.cfl * g_.h / std::max(sp, Real(1e-12));
    return std::min(dt_adv, cfg_.dt_max);
  }

  MacVel relative(const NSState& s) const {
    MacVel rel = s.w;
    if (cfg_.has_body) {
      MacVel us = mac_rigid(g_, s.body.ell, s.body.r);
      rel.u -= us.u;
      rel.v -= us.v;
    }
    return rel;
  }

  /// One step: explicit transport, then a short fixed-point loop coupling
  /// the surface-pressure body update, the slip-shell constraint, and the
  /// projection.
  void step(NSState& s, Real dt, EnergyLedgerRow* led = nullptr) {
    if (dt <= 0) throw std::invalid_argument("step: dt must be positive");
    if (dt > cfl_dt(s) * (1 + 1e-12)) throw std::runtime_error("step: dt exceeds CFL limit");

    MacVel rel = relative(s);
    MacVel tend = mac_advect(g_, s.w, rel, cfg_.bc);
    s.w.u += dt * tend.u;
    s.w.v += dt * tend.v;
    // gravity only on projection-active faces: constrained faces never see
    // the pressure correction, so an impulse there would pile up as a
    // spurious tangential shear along the interface
    Vec2 gb = s.body.Q().transpose() * cfg_.gravity;
    if (gb.squaredNorm() > 0) {
      if (cfg_.has_body) {
        s.w.u += dt * gb.x() * masked_->face_mask_x();
        s.w.v += dt * gb.y() * masked_->face_mask_y();
      } else {
        s.w.u += dt * gb.x();
        s.w.v += dt * gb.y();
      }
    }
    if (s.body.r != 0) mac_rotate_components(s.w, -s.body.r * dt);
    s.w.enforce_normal_bc();

    const MacVel base = s.w;
    Vec2 ell_new = s.body.ell;
    Real r_new = s.body.r;
    ScalarField p_est = s.p;  // previous pressure bootstraps the first pass
    int passes = cfg_.has_body ? cfg_.picard : 1;
    for (int pass = 0; pass < passes; ++pass) {
      if (cfg_.has_body) {
        if (cfg_.frozen_body) {
          ell_new.setZero();
          r_new = 0;
        } else {
          Vec2 fp;
          Real tq;
          pressure_force(p_est, fp, tq);
          Real m = cfg_.body.mass();
          ell_new = s.body.ell +
                    dt * ((fp / m) + gb - s.body.r * perp(s.body.ell));
          r_new = s.body.r + dt * tq / cfg_.body.inertia();
        }
      }
      s.w = base;
      if (cfg_.has_body) rigidify(s.w, ell_new, r_new);
      project(s.w, s.p, dt);
      p_est = s.p;
    }
    s.body.ell = ell_new;
    s.body.r = r_new;

    if (led) led->work += dt * work_rate(s.body);
    s.body.h += dt * (s.body.Q() * s.body.ell);
    s.body.theta += dt * s.body.r;
    s.t += dt;
  }

  Trajectory run() {
    Trajectory traj;
    NSState s = initial_state();
    traj.kinetic0 = mac_kinetic_energy(g_, s.w, rho_);
    EnergyLedgerRow acc;
    push_sample(traj, s, acc);
    int k = 0;
    while (s.t < cfg_.T - 1e-12) {
      Real dt = std::min(cfl_dt(s), cfg_.T - s.t);
      step(s, dt, &acc);
      ++k;
      traj.steps_taken = k;
      if (k % cfg_.sample_stride == 0 || s.t >= cfg_.T - 1e-12) push_sample(traj, s, acc);
    }
    return traj;
  }

  /// Same weak-form gravity power as the viscous solver.
  Real work_rate(const BodyState& b) const {
    if (!cfg_.has_body) return 0;
    Vec2 gb = b.Q().transpose() * cfg_.gravity;
    return cfg_.body.buoyant_mass() * gb.dot(b.ell) -
           cfg_.body.area() * gb.dot(b.r * perp(cfg_.body.centroid()));
  }

  /// Pressure force/torque on the body: quadrature of -p n over the boundary,
  /// with p sampled at two interior-fluid offsets and extrapolated back to
  /// the wall to step over the staircase transition.
  void pressure_force(const ScalarField& p, Vec2& force, Real& torque, int npts = 256) const {
    auto qs = cfg_.body.boundary_quadrature(npts);
    force.setZero();
    torque = 0;
    Real d1 = g_.h, d2 = 2 * g_.h;
    for (const auto& q : qs) {
      Real p1 = p.sample(q.x + d1 * q.normal);
      Real p2 = p.sample(q.x + d2 * q.normal);
      Real p0 = 2 * p1 - p2;
      force -= q.weight * p0 * q.normal;
      torque -= q.weight * p0 * cross2(q.x, q.normal);
    }
  }

  /// Interior coupling: hard normal constraint through the whole body (the
  /// slip shell), blended into a full rigid constraint away from the
  /// boundary by a quintic ramp.  Tangential velocity in the shell is free.
  void rigidify(MacVel& w, const Vec2& ell, Real r) const {
    for (const auto& f : faces_u_) {
      Real us = ell.x() - r * f.y;
      Real vs = ell.y() + r * f.x;
      Real vavg = Real(0.25) * (w.v(f.i - 1, f.j) + w.v(f.i, f.j) + w.v(f.i - 1, f.j + 1) +
                                w.v(f.i, f.j + 1));
      Real cx = us - w.u(f.i, f.j);
      Real cy = vs - vavg;
      Real cn = cx * f.nx + cy * f.ny;
      w.u(f.i, f.j) += f.beta * cx + (1 - f.beta) * cn * f.nx;
    }
    for (const auto& f : faces_v_) {
      Real us = ell.x() - r * f.y;
      Real vs = ell.y() + r * f.x;
      Real uavg = Real(0.25) * (w.u(f.i, f.j - 1) + w.u(f.i, f.j) + w.u(f.i + 1, f.j - 1) +
                                w.u(f.i + 1, f.j));
      Real cx = us - uavg;
      Real cy = vs - w.v(f.i, f.j);
      Real cn = cx * f.nx + cy * f.ny;
      w.v(f.i, f.j) += f.beta * cy + (1 - f.beta) * cn * f.ny;
    }
    w.enforce_normal_bc();
  }

  /// Projection in the uniform metric with the body masked out as an
  /// impermeable region: constrained faces are never updated, so rigidity
  /// survives the projection exactly and no flux passes through the body.
  void project(MacVel& w, ScalarField& p, Real dt) const {
    ScalarField rhs = mac_divergence(g_, w);
    ScalarField phi(g_);
    const Real ih = 1 / g_.h;
    if (cfg_.has_body) {
      int iters = 0;
      Real res = 0;
      phi = masked_->solve(rhs, &iters, &res);
      if (res > 1e-8) throw std::runtime_error("masked projection: iteration cap hit");
      const auto& mx = masked_->face_mask_x();
      const auto& my = masked_->face_mask_y();
      for (int j = 0; j < g_.n; ++j)
        for (int i = 1; i < g_.n; ++i)
          if (mx(i, j) > 0) w.u(i, j) -= (phi(i, j) - phi(i - 1, j)) * ih;
      for (int j = 1; j < g_.n; ++j)
        for (int i = 0; i < g_.n; ++i)
          if (my(i, j) > 0) w.v(i, j) -= (phi(i, j) - phi(i, j - 1)) * ih;
    } else {
      phi = poisson_.solve(rhs);
      for (int j = 0; j < g_.n; ++j)
        for (int i = 1; i < g_.n; ++i) w.u(i, j) -= (phi(i, j) - phi(i - 1, j)) * ih;
      for (int j = 1; j < g_.n; ++j)
        for (int i = 0; i < g_.n; ++i) w.v(i, j) -= (phi(i, j) - phi(i, j - 1)) * ih;
    }
    w.enforce_normal_bc();
    p.data() = phi.data() / dt;
  }


 private:
  struct CoupledFace {
    int i, j;
    Real x, y, nx, ny, beta;
  };

  /// Outward normal from central differences of the signed distance.
  Vec2 sdf_normal(const Vec2& x) const {
    Real e = Real(0.5) * g_.h;
    Real gx = cfg_.body.signed_distance(x + Vec2(e, 0)) - cfg_.body.signed_distance(x - Vec2(e, 0));
    Real gy = cfg_.body.signed_distance(x + Vec2(0, e)) - cfg_.body.signed_distance(x - Vec2(0, e));
    Vec2 n(gx, gy);
    Real nn = n.norm();
    return (nn > 1e-14) ? Vec2(n / nn) : Vec2(1, 0);
  }

  static Real quintic(Real t) {
    t = std::min(std::max(t, Real(0)), Real(1));
    return t * t * t * (10 + t * (-15 + 6 * t));
  }

  void build_face_masks() {
    const Real sw = cfg_.shell_width;
    for (int j = 0; j < g_.n; ++j)
      for (int i = 1; i < g_.n; ++i) {
        Vec2 x(g_.xf(i), g_.yc(j));
        Real d = cfg_.body.signed_distance(x);
        if (d >= 0) continue;
        Vec2 nn = sdf_normal(x);
        Real beta = quintic((-d / g_.h - 1) / std::max(sw - 1, Real(1e-12)));
        faces_u_.push_back({i, j, x.x(), x.y(), nn.x(), nn.y(), beta});
      }
    for (int j = 1; j < g_.n; ++j)
      for (int i = 0; i < g_.n; ++i) {
        Vec2 x(g_.xc(i), g_.yf(j));
        Real d = cfg_.body.signed_distance(x);
        if (d >= 0) continue;
        Vec2 nn = sdf_normal(x);
        Real beta = quintic((-d / g_.h - 1) / std::max(sw - 1, Real(1e-12)));
        faces_v_.push_back({i, j, x.x(), x.y(), nn.x(), nn.y(), beta});
      }
  }

  void push_sample(Trajectory& traj, const NSState& s, const EnergyLedgerRow& acc) {
    NSState copy = s;
    traj.states.push_back(std::move(copy));
    EnergyLedgerRow row = acc;
    row.t = s.t;
    row.kinetic = mac_kinetic_energy(g_, s.w, rho_);
    row.ell_x = s.body.ell.x();
    row.ell_y = s.body.ell.y();
    row.r = s.body.r;
    row.h_x = s.body.h.x();
    row.h_y = s.body.h.y();
    row.theta = s.body.theta;
    traj.rows.push_back(row);
  }

  EulerConfig cfg_;
  Grid g_;
  FaceRho rho_;
  DctPoisson poisson_;
  std::unique_ptr<MaskedPoisson> masked_;
  std::vector<CoupledFace> faces_u_, faces_v_;
};

}  // namespace kfsi
