#pragma once

/// @file simpson2d.hpp
/// @brief Dense composite-Simpson quadrature oracle, independent of the
///        library's midpoint/staircase quadrature path.  Used to validate
///        volume integrals of analytic integrands to near round-off.

#include <functional>
#include <stdexcept>
#include <vector>

#include "kfsi/types.hpp"

namespace kfsi::oracle {

/// Composite Simpson rule on [-L,L]^2 with N panels per direction (N even).
inline Real simpson2d(Real L, int N, const std::function<Real(Real, Real)>& f) {
  if (N % 2 != 0) throw std::invalid_argument("simpson2d: N must be even");
  const Real h = 2 * L / N;
  std::vector<Real> w(N + 1, 0.0);
  w[0] = w[N] = 1.0;
  for (int i = 1; i < N; ++i) w[i] = (i % 2 == 1) ? 4.0 : 2.0;
  Real s = 0;
  for (int j = 0; j <= N; ++j) {
    Real y = -L + j * h;
    Real row = 0;
    for (int i = 0; i <= N; ++i) row += w[i] * f(-L + i * h, y);
    s += w[j] * row;
  }
  return s * h * h / 9.0;
}

/// Convective pairing in skew form, integrated densely over the full box.
/// Valid as a stand-in for the fluid-domain integral whenever every field
/// is negligible on the solid and near the box frame.
inline Real dense_convection(Real L, int N,
                             const std::function<Vec2(const Vec2&)>& au,
                             const std::function<Mat2(const Vec2&)>& jv,
                             const std::function<Vec2(const Vec2&)>& vv,
                             const std::function<Mat2(const Vec2&)>& jw,
                             const std::function<Vec2(const Vec2&)>& vw) {
  return simpson2d(L, N, [&](Real x, Real y) {
    Vec2 p(x, y);
    Vec2 a = au(p), v = vv(p), w = vw(p);
    Vec2 adw = jw(p) * a;  // (a . grad) w
    Vec2 adv = jv(p) * a;  // (a . grad) v
    return Real(0.5) * (adw.dot(v) - adv.dot(w));
  });
}

}  // namespace kfsi::oracle
