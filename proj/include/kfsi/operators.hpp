#pragma once

/// @file operators.hpp
/// @brief Discrete differential operators and quadratures on cell-centered
///        fields: second-order centered stencils inside, one-sided
///        second-order at the truncation box edges.
///
/// Tensor conventions used throughout:
///   grad(U)_ij = d_j U_i                      (rows components, cols derivatives)
///   D(U)       = (grad + grad^T)/2            (deformation)
///   W(U)       = (grad - grad^T)/2            (antisymmetric part; its
///                Frobenius norm squared equals vorticity^2 / 2)
///   vorticity  = d_x U_y - d_y U_x            (scalar 2D curl)

#include "kfsi/field.hpp"
#include "kfsi/geometry.hpp"

namespace kfsi {

// ============================================================================
// First derivatives
// ============================================================================

inline ScalarField dx(const ScalarField& f) {
  const Grid& g = f.grid();
  ScalarField r(g);
  const Real ih2 = 1 / (2 * g.h);
  const int n = g.n;
  for (int j = 0; j < n; ++j) {
    r(0, j) = (-3 * f(0, j) + 4 * f(1, j) - f(2, j)) * ih2;
    for (int i = 1; i < n - 1; ++i) r(i, j) = (f(i + 1, j) - f(i - 1, j)) * ih2;
    r(n - 1, j) = (3 * f(n - 1, j) - 4 * f(n - 2, j) + f(n - 3, j)) * ih2;
  }
  return r;
}

inline ScalarField dy(const ScalarField& f) {
  const Grid& g = f.grid();
  ScalarField r(g);
  const Real ih2 = 1 / (2 * g.h);
  const int n = g.n;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (j == 0)
        r(i, j) = (-3 * f(i, 0) + 4 * f(i, 1) - f(i, 2)) * ih2;
      else if (j == n - 1)
        r(i, j) = (3 * f(i, n - 1) - 4 * f(i, n - 2) + f(i, n - 3)) * ih2;
      else
        r(i, j) = (f(i, j + 1) - f(i, j - 1)) * ih2;
    }
  }
  return r;
}

// ============================================================================
// Vector operators
// ============================================================================

inline TensorField gradient(const VectorField& u) {
  TensorField t(u.grid());
  t.xx() = dx(u.x());
  t.xy() = dy(u.x());
  t.yx() = dx(u.y());
  t.yy() = dy(u.y());
  return t;
}

inline TensorField deformation(const VectorField& u) {
  TensorField t(u.grid());
  ScalarField ux_x = dx(u.x()), ux_y = dy(u.x());
  ScalarField uy_x = dx(u.y()), uy_y = dy(u.y());
  t.xx() = ux_x;
  t.yy() = uy_y;
  t.xy().data() = (ux_y.data() + uy_x.data()) / 2;
  t.yx() = t.xy();
  return t;
}

inline TensorField antisymmetric_gradient(const VectorField& u) {
  TensorField t(u.grid());
  ScalarField ux_y = dy(u.x()), uy_x = dx(u.y());
  t.xy().data() = (ux_y.data() - uy_x.data()) / 2;
  t.yx().data() = -t.xy().data();
  // diagonal stays zero
  return t;
}

inline ScalarField vorticity(const VectorField& u) {
  ScalarField w(u.grid());
  w.data() = dx(u.y()).data() - dy(u.x()).data();
  return w;
}

inline ScalarField divergence(const VectorField& u) {
  ScalarField d(u.grid());
  d.data() = dx(u.x()).data() + dy(u.y()).data();
  return d;
}

/// a : b, pointwise double contraction of two tensor fields
inline ScalarField contract(const TensorField& a, const TensorField& b) {
  ScalarField r(a.grid());
  r.data() = a.xx().data() * b.xx().data() + a.xy().data() * b.xy().data() +
             a.yx().data() * b.yx().data() + a.yy().data() * b.yy().data();
  return r;
}

// ============================================================================
// Quadratures
// ============================================================================

inline Real integral(const ScalarField& f) { return f.data().sum() * f.grid().cell_area(); }

inline Real masked_integral(const ScalarField& f, const ScalarField& mask) {
  return (f.data() * mask.data()).sum() * f.grid().cell_area();
}

inline Real dot_integral(const VectorField& a, const VectorField& b) {
  return (a.x().data() * b.x().data() + a.y().data() * b.y().data()).sum() * a.grid().cell_area();
}

inline Real masked_dot_integral(const VectorField& a, const VectorField& b, const ScalarField& mask) {
  return ((a.x().data() * b.x().data() + a.y().data() * b.y().data()) * mask.data()).sum() *
         a.grid().cell_area();
}

/// Inner product of the energy space: fluid cells weigh 1, body cells weigh
/// the density ratio.  `body` is the 0/1 body-interior mask.
inline Real inner_product_H(const VectorField& a, const VectorField& b, const ScalarField& body,
                            Real density) {
  const auto prod = a.x().data() * b.x().data() + a.y().data() * b.y().data();
  const auto w = 1 + (density - 1) * body.data();
  return (prod * w).sum() * a.grid().cell_area();
}

inline Real norm_H(const VectorField& a, const ScalarField& body, Real density) {
  return std::sqrt(std::max<Real>(0, inner_product_H(a, a, body, density)));
}

/// Weighted H1 seminorm: integral of |grad u|^2 (1+|x|^2)^p over the masked
/// region (mask defaults to the whole box when null).  p = 1/2 matches the
/// decay weight used by the diagnostics; p = 1 is the membership test for the
/// weighted space of admissible multiplier fields.
inline Real weighted_H1_seminorm(const VectorField& u, Real p = Real(0.5),
                                 const ScalarField* mask = nullptr) {
  const Grid& g = u.grid();
  TensorField gr = gradient(u);
  ScalarField f2(g);
  f2.data() = gr.frobenius2();
  Real s = 0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real w = std::pow(1 + g.center(i, j).squaredNorm(), p);
      Real m = mask ? (*mask)(i, j) : Real(1);
      s += f2(i, j) * w * m;
    }
  return s * g.cell_area();
}

inline Real max_abs(const ScalarField& f) { return f.data().abs().maxCoeff(); }

inline Real max_norm(const VectorField& u) {
  return std::sqrt((u.x().data().square() + u.y().data().square()).maxCoeff());
}

}  // namespace kfsi
