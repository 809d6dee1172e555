#pragma once

/// @file grid.hpp
/// @brief Uniform square grid on the truncation box [-L,L]^2.
///
/// Scalar diagnostics live at cell centers; the solver additionally uses a
/// staggered (MAC) layout whose face coordinates are derived from the same
/// descriptor.  The box half-width L is configurable; the body is always
/// anchored at the origin of the (body-frame) grid.

#include <cassert>
#include <stdexcept>

#include "kfsi/types.hpp"

namespace kfsi {

struct Grid {
  int n = 0;     // cells per direction
  Real L = 0;    // box is [-L, L]^2
  Real h = 0;    // cell width, 2L/n

  Grid() = default;
  Grid(int n_, Real L_) : n(n_), L(L_), h(2 * L_ / n_) {
    if (n_ <= 0 || L_ <= 0) throw std::invalid_argument("grid: n and L must be positive");
  }

  // cell-center coordinates, i,j in [0,n)
  Real xc(int i) const { return -L + (i + Real(0.5)) * h; }
  Real yc(int j) const { return -L + (j + Real(0.5)) * h; }
  Vec2 center(int i, int j) const { return Vec2(xc(i), yc(j)); }

  // face coordinates for the staggered layout
  Real xf(int i) const { return -L + i * h; }  // u-face x, i in [0,n]
  Real yf(int j) const { return -L + j * h; }  // v-face y, j in [0,n]

  Real cell_area() const { return h * h; }
  int cell_count() const { return n * n; }

  bool inside(const Vec2& p) const {
    return p.x() > -L && p.x() < L && p.y() > -L && p.y() < L;
  }

  bool operator==(const Grid& o) const { return n == o.n && L == o.L; }
};

inline bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace kfsi
