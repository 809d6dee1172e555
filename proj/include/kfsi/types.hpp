#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace kfsi {

using Real = double;
using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;

// z-component of the planar cross product a x b
inline Real cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// r e_z x a for a planar vector a (rotation generator applied to a)
inline Vec2 perp(const Vec2& a) { return Vec2(-a.y(), a.x()); }

inline Mat2 rotation2(Real theta) {
  Mat2 q;
  q << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return q;
}

constexpr Real kPi = 3.14159265358979323846;

}  // namespace kfsi
