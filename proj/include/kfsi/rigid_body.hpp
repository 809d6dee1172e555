#pragma once

/// @file rigid_body.hpp
/// @brief Rigid body kinematics: 2D state carried by the solver plus the 3D
///        rotation/inertia utilities (integrated exactly enough that
///        orthonormality holds to round-off over long runs).

#include <functional>

#include "kfsi/field.hpp"
#include "kfsi/types.hpp"

namespace kfsi {

/// 2D body state in the body-attached frame.  ell and r are the body-frame
/// linear/angular velocities; h and theta track the lab-frame placement for
/// diagnostics (the grid itself never moves).
struct BodyState {
  Vec2 ell = Vec2::Zero();
  Real r = 0;
  Real theta = 0;
  Vec2 h = Vec2::Zero();

  Mat2 Q() const { return rotation2(theta); }
  Vec2 solid_velocity_at(const Vec2& x) const { return ell + r * perp(x); }
};

/// Rigid field ell + r x-perp sampled on the whole grid.
inline VectorField solid_velocity(const Grid& g, const BodyState& s) {
  VectorField u(g);
  u.fill([&](Real x, Real y) -> Vec2 { return s.ell + s.r * perp(Vec2(x, y)); });
  return u;
}

// ============================================================================
// 3D rotation utilities
// ============================================================================

inline Mat3 hat(const Vec3& r) {
  Mat3 m;
  m << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
  return m;
}

/// Closed-form rotation exp(t hat(r)) (axis-angle).
inline Mat3 rotation_exp(const Vec3& r, Real t) {
  Real a = r.norm() * t;
  if (a < 1e-300) return Mat3::Identity();
  Vec3 k = r / r.norm();
  Mat3 K = hat(k);
  return Mat3::Identity() + std::sin(a) * K + (1 - std::cos(a)) * K * K;
}

/// Orthonormalize a near-rotation matrix (closest rotation by polar factor).
inline Mat3 renormalize_rotation(const Mat3& q) {
  Eigen::JacobiSVD<Mat3> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

/// Integrate Q' = Q (r(t) ^ .), Q(0) = q0, with RK4 steps and per-step
/// renormalization.  r is given as a function of time.
inline Mat3 integrate_rotation(const Mat3& q0, const std::function<Vec3(Real)>& r, Real t0, Real t1,
                               int steps) {
  Mat3 q = q0;
  Real dt = (t1 - t0) / steps;
  for (int s = 0; s < steps; ++s) {
    Real t = t0 + s * dt;
    auto f = [&](Real tt, const Mat3& m) { return Mat3(m * hat(r(tt))); };
    Mat3 k1 = f(t, q);
    Mat3 k2 = f(t + dt / 2, q + dt / 2 * k1);
    Mat3 k3 = f(t + dt / 2, q + dt / 2 * k2);
    Mat3 k4 = f(t + dt, q + dt * k3);
    q += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    q = renormalize_rotation(q);
  }
  return q;
}

/// Time-dependent inertia J(t) = Q J0 Q^T.
inline Mat3 inertia_at(const Mat3& q, const Mat3& j0) { return q * j0 * q.transpose(); }

// ============================================================================
// Frame maps
// ============================================================================

/// Map a body-frame velocity field to the lab frame on a caller-supplied lab
/// grid: U(y) = Q u(Q^T (y - h)).  Points that fall outside the body-frame
/// grid are zero-filled and counted.
inline VectorField body_to_lab(const VectorField& u, const BodyState& s, const Grid& lab,
                               int* outside_count = nullptr) {
  VectorField out(lab);
  Mat2 q = s.Q();
  int misses = 0;
  for (int j = 0; j < lab.n; ++j)
    for (int i = 0; i < lab.n; ++i) {
      Vec2 y = lab.center(i, j);
      Vec2 x = q.transpose() * (y - s.h);
      if (u.grid().inside(x)) {
        out.set(i, j, q * u.sample(x));
      } else {
        ++misses;
      }
    }
  if (outside_count) *outside_count = misses;
  return out;
}

/// Inverse map: u(x) = Q^T U(Q x + h).
inline VectorField lab_to_body(const VectorField& U, const BodyState& s, const Grid& body,
                               int* outside_count = nullptr) {
  VectorField out(body);
  Mat2 q = s.Q();
  int misses = 0;
  for (int j = 0; j < body.n; ++j)
    for (int i = 0; i < body.n; ++i) {
      Vec2 x = body.center(i, j);
      Vec2 y = q * x + s.h;
      if (U.grid().inside(y)) {
        out.set(i, j, q.transpose() * U.sample(y));
      } else {
        ++misses;
      }
    }
  if (outside_count) *outside_count = misses;
  return out;
}

}  // namespace kfsi
