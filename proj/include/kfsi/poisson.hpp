#pragma once

/// @file poisson.hpp
/// @brief Cell-centered Poisson solvers on the truncation box with natural
///        (homogeneous Neumann) closure: a direct DCT solver for the uniform
///        operator and a preconditioned conjugate gradient for the
///        density-weighted operator div(w grad phi).
///
/// The discrete operator matches the MAC projection exactly: boundary faces
/// carry zero flux, interior faces carry w_face (phi_nb - phi)/h^2.

#include <vector>

#include "kfsi/fft.hpp"
#include "kfsi/field.hpp"
#include "kfsi/grid.hpp"

namespace kfsi {

/// Direct solver for the 5-point Laplacian with mirrored (Neumann) closure.
/// Solves  Lap phi = rhs  on the mean-zero subspace; the zero mode of the
/// right-hand side is discarded.
class DctPoisson {
 public:
  explicit DctPoisson(const Grid& g) : g_(g) {
    if (!is_pow2(g.n)) throw std::invalid_argument("dct poisson: n must be a power of two");
    lam_.resize(g.n);
    for (int k = 0; k < g.n; ++k)
      lam_[k] = (2 * std::cos(kPi * k / g.n) - 2) / (g.h * g.h);
  }

  ScalarField solve(const ScalarField& rhs) const {
    const int n = g_.n;
    ScalarField out = rhs;
    auto& a = out.data();
    std::vector<Cplx> work;
    std::vector<Real> line(n), tline(n);

    // DCT-II along x (contiguous columns), then along y
    for (int j = 0; j < n; ++j) {
      dct2_pow2(a.col(j).data(), line.data(), n, work);
      for (int i = 0; i < n; ++i) a(i, j) = line[i];
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) line[j] = a(i, j);
      dct2_pow2(line.data(), tline.data(), n, work);
      for (int j = 0; j < n; ++j) a(i, j) = tline[j];
    }

    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Real den = lam_[i] + lam_[j];
        a(i, j) = (i == 0 && j == 0) ? 0 : a(i, j) / den;
      }

    // inverse transforms (DCT-III), then the 2/n normalization per direction
    for (int j = 0; j < n; ++j) {
      dct3_pow2(a.col(j).data(), line.data(), n, work);
      for (int i = 0; i < n; ++i) a(i, j) = line[i];
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) line[j] = a(i, j);
      dct3_pow2(line.data(), tline.data(), n, work);
      for (int j = 0; j < n; ++j) a(i, j) = tline[j];
    }
    a *= Real(4) / (Real(n) * Real(n));
    return out;
  }

 private:
  Grid g_;
  std::vector<Real> lam_;
};

/// Face-weight container for the weighted operator (wx on vertical faces,
/// wy on horizontal faces; box-boundary faces are ignored).
struct FaceWeights {
  Eigen::ArrayXXd wx;  // (n+1) x n
  Eigen::ArrayXXd wy;  // n x (n+1)
  static FaceWeights uniform(const Grid& g, Real v = 1) {
    return {Eigen::ArrayXXd::Constant(g.n + 1, g.n, v), Eigen::ArrayXXd::Constant(g.n, g.n + 1, v)};
  }
};

/// PCG for  div(w grad phi) = rhs  with the DCT solver as preconditioner.
/// Iteration count is capped for determinism; the solve reports the final
/// relative residual so callers can assert convergence.
class WeightedPoisson {
 public:
  WeightedPoisson(const Grid& g, FaceWeights w, int max_iter = 80, Real tol = 1e-12)
      : g_(g), w_(std::move(w)), pre_(g), max_iter_(max_iter), tol_(tol) {}

  void apply(const ScalarField& phi, ScalarField& out) const {
    const int n = g_.n;
    const Real ih2 = 1 / (g_.h * g_.h);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Real s = 0, p = phi(i, j);
        if (i > 0) s += w_.wx(i, j) * (phi(i - 1, j) - p);
        if (i < n - 1) s += w_.wx(i + 1, j) * (phi(i + 1, j) - p);
        if (j > 0) s += w_.wy(i, j) * (phi(i, j - 1) - p);
        if (j < n - 1) s += w_.wy(i, j + 1) * (phi(i, j + 1) - p);
        out(i, j) = s * ih2;
      }
  }

  /// Returns phi with zero mean; *iters/*rel_res report convergence.
  ScalarField solve(const ScalarField& rhs, int* iters = nullptr, Real* rel_res = nullptr) const {
    const int n = g_.n;
    ScalarField x(g_), r = rhs, z(g_), p(g_), ap(g_);
    r.data() -= r.data().mean();  // compatibility
    Real rhs_norm = std::sqrt((r.data() * r.data()).sum());
    if (rhs_norm == 0) {
      if (iters) *iters = 0;
      if (rel_res) *rel_res = 0;
      return x;
    }
    z = pre_.solve(r);
    p = z;
    Real rz = (r.data() * z.data()).sum();
    int it = 0;
    Real res = 1;
    for (; it < max_iter_; ++it) {
      res = std::sqrt((r.data() * r.data()).sum()) / rhs_norm;
      if (res < tol_) break;
      apply(p, ap);
      Real pap = (p.data() * ap.data()).sum();
      if (pap == 0) break;  // operator is negative semidefinite; pap < 0 normally
      Real alpha = rz / pap;
      x.data() += alpha * p.data();
      r.data() -= alpha * ap.data();
      r.data() -= r.data().mean();
      z = pre_.solve(r);
      Real rz_new = (r.data() * z.data()).sum();
      Real beta = rz_new / rz;
      rz = rz_new;
      p.data() = z.data() + beta * p.data();
    }
    x.data() -= x.data().mean();
    if (iters) *iters = it;
    if (rel_res) *rel_res = res;
    return x;
  }

 private:
  Grid g_;
  FaceWeights w_;
  DctPoisson pre_;
  int max_iter_;
  Real tol_;
};

}  // namespace kfsi
