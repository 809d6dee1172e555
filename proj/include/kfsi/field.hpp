#pragma once

/// @file field.hpp
/// @brief Cell-centered scalar/vector/tensor fields backed by Eigen arrays.
///
/// Storage is column-major with the x index fastest, so f(i,j) maps to
/// data(i,j) and x-sweeps are contiguous.  Fields are templated on the scalar
/// type with Real as the working default; all free functions below are
/// expression-friendly (they reduce to Eigen array expressions).

#include <functional>

#include "kfsi/grid.hpp"
#include "kfsi/types.hpp"

namespace kfsi {

template <typename S = Real>
class ScalarFieldT {
 public:
  using Array = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;

  ScalarFieldT() = default;
  explicit ScalarFieldT(const Grid& g, S init = S(0)) : grid_(g), a_(Array::Constant(g.n, g.n, init)) {}

  const Grid& grid() const { return grid_; }
  S& operator()(int i, int j) { return a_(i, j); }
  S operator()(int i, int j) const { return a_(i, j); }
  Array& data() { return a_; }
  const Array& data() const { return a_; }

  // bilinear sample with edge clamping
  S sample(const Vec2& p) const {
    const Grid& g = grid_;
    Real fx = (p.x() - g.xc(0)) / g.h, fy = (p.y() - g.yc(0)) / g.h;
    int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
    i = std::max(0, std::min(g.n - 2, i));
    j = std::max(0, std::min(g.n - 2, j));
    Real tx = std::max<Real>(0, std::min<Real>(1, fx - i));
    Real ty = std::max<Real>(0, std::min<Real>(1, fy - j));
    return (1 - tx) * (1 - ty) * a_(i, j) + tx * (1 - ty) * a_(i + 1, j) +
           (1 - tx) * ty * a_(i, j + 1) + tx * ty * a_(i + 1, j + 1);
  }

  void fill(const std::function<S(Real, Real)>& f) {
    for (int j = 0; j < grid_.n; ++j)
      for (int i = 0; i < grid_.n; ++i) a_(i, j) = f(grid_.xc(i), grid_.yc(j));
  }

 private:
  Grid grid_;
  Array a_;
};

template <typename S = Real>
class VectorFieldT {
 public:
  VectorFieldT() = default;
  explicit VectorFieldT(const Grid& g, S init = S(0)) : x_(g, init), y_(g, init) {}

  const Grid& grid() const { return x_.grid(); }
  ScalarFieldT<S>& x() { return x_; }
  ScalarFieldT<S>& y() { return y_; }
  const ScalarFieldT<S>& x() const { return x_; }
  const ScalarFieldT<S>& y() const { return y_; }

  Eigen::Matrix<S, 2, 1> at(int i, int j) const { return {x_(i, j), y_(i, j)}; }
  void set(int i, int j, const Eigen::Matrix<S, 2, 1>& v) {
    x_(i, j) = v.x();
    y_(i, j) = v.y();
  }
  Eigen::Matrix<S, 2, 1> sample(const Vec2& p) const { return {x_.sample(p), y_.sample(p)}; }

  void fill(const std::function<Eigen::Matrix<S, 2, 1>(Real, Real)>& f) {
    const Grid& g = grid();
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) set(i, j, f(g.xc(i), g.yc(j)));
  }

 private:
  ScalarFieldT<S> x_, y_;
};

/// 2x2 tensor field; symmetric/antisymmetric users just fill all four slots.
template <typename S = Real>
class TensorFieldT {
 public:
  TensorFieldT() = default;
  explicit TensorFieldT(const Grid& g) : xx_(g), xy_(g), yx_(g), yy_(g) {}

  const Grid& grid() const { return xx_.grid(); }
  ScalarFieldT<S>& xx() { return xx_; }
  ScalarFieldT<S>& xy() { return xy_; }
  ScalarFieldT<S>& yx() { return yx_; }
  ScalarFieldT<S>& yy() { return yy_; }
  const ScalarFieldT<S>& xx() const { return xx_; }
  const ScalarFieldT<S>& xy() const { return xy_; }
  const ScalarFieldT<S>& yx() const { return yx_; }
  const ScalarFieldT<S>& yy() const { return yy_; }

  Eigen::Matrix<S, 2, 2> at(int i, int j) const {
    Eigen::Matrix<S, 2, 2> m;
    m << xx_(i, j), xy_(i, j), yx_(i, j), yy_(i, j);
    return m;
  }

  // pointwise Frobenius norm squared
  typename ScalarFieldT<S>::Array frobenius2() const {
    return xx_.data().square() + xy_.data().square() + yx_.data().square() + yy_.data().square();
  }

 private:
  ScalarFieldT<S> xx_, xy_, yx_, yy_;
};

using ScalarField = ScalarFieldT<Real>;
using VectorField = VectorFieldT<Real>;
using TensorField = TensorFieldT<Real>;

}  // namespace kfsi
