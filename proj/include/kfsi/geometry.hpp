#pragma once

/// @file geometry.hpp
/// @brief Rigid body geometry anchored at the grid origin: signed distance,
///        mass properties, boundary quadrature, and near-boundary strips.
///
/// Convention: the signed distance d is positive in the fluid, negative inside
/// the body, and grad d is the unit normal pointing from the body into the
/// fluid.  The fluid density is normalized to 1, so body "density" is the
/// ratio rho_S/rho_F.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kfsi/field.hpp"
#include "kfsi/grid.hpp"
#include "kfsi/types.hpp"

namespace kfsi {

enum class BodyShape { Disk, Polygon };

struct BoundaryPoint {
  Vec2 x;       // point on the boundary
  Vec2 normal;  // unit, outward from the body
  Real weight;  // arc-length quadrature weight
};

class BodyGeometry {
 public:
  static BodyGeometry disk(Real radius, Real density) {
    BodyGeometry g;
    g.shape_ = BodyShape::Disk;
    g.radius_ = radius;
    g.density_ = density;
    g.area_ = kPi * radius * radius;
    g.centroid_ = Vec2::Zero();
    g.inertia_ = density * kPi * radius * radius * radius * radius / 2;  // rho * int |x|^2
    return g;
  }

  // convex polygon, vertices counter-clockwise
  static BodyGeometry polygon(std::vector<Vec2> verts, Real density) {
    if (verts.size() < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
    BodyGeometry g;
    g.shape_ = BodyShape::Polygon;
    g.verts_ = std::move(verts);
    g.density_ = density;
    Real a2 = 0;            // twice the signed area
    Vec2 c = Vec2::Zero();  // centroid accumulator (times 6A)
    Real j = 0;             // second moment about origin
    const auto& v = g.verts_;
    for (size_t k = 0; k < v.size(); ++k) {
      const Vec2& p = v[k];
      const Vec2& q = v[(k + 1) % v.size()];
      Real cr = cross2(p, q);
      a2 += cr;
      c += cr * (p + q);
      j += cr * (p.squaredNorm() + q.squaredNorm() + p.dot(q)) / 6;
    }
    if (a2 <= 0) throw std::invalid_argument("polygon vertices must be counter-clockwise");
    g.area_ = a2 / 2;
    g.centroid_ = c / (3 * a2);
    g.inertia_ = density * j / 2;
    return g;
  }

  BodyShape shape() const { return shape_; }
  Real radius() const { return radius_; }
  Real density() const { return density_; }
  Real area() const { return area_; }          // Vol(S_0)
  Real mass() const { return density_ * area_; }
  Real inertia() const { return inertia_; }    // J_0 about the origin
  Real buoyant_mass() const { return mass() - area_; }  // m - Vol, fluid density 1
  const Vec2& centroid() const { return centroid_; }

  /// Signed distance to the body boundary; exact for the disk, exact for
  /// convex polygons (max over half-plane distances inside, edge distance
  /// outside).
  Real signed_distance(const Vec2& p) const {
    if (shape_ == BodyShape::Disk) return p.norm() - radius_;
    Real inside = -1e300;  // max of signed half-plane distances (negative inside)
    Real best2 = 1e300;    // squared distance to the boundary
    bool out = false;
    const auto& v = verts_;
    for (size_t k = 0; k < v.size(); ++k) {
      const Vec2& a = v[k];
      const Vec2& b = v[(k + 1) % v.size()];
      Vec2 e = b - a;
      Real len = e.norm();
      Vec2 n(e.y() / len, -e.x() / len);  // outward for CCW ordering
      Real sd = n.dot(p - a);
      inside = std::max(inside, sd);
      if (sd > 0) out = true;
      Real t = std::max<Real>(0, std::min<Real>(1, e.dot(p - a) / (len * len)));
      best2 = std::min(best2, (p - (a + t * e)).squaredNorm());
    }
    return out ? std::sqrt(best2) : inside;
  }

  /// Closest point on the boundary (foot of the distance).
  Vec2 closest_boundary_point(const Vec2& p) const {
    if (shape_ == BodyShape::Disk) {
      Real r = p.norm();
      if (r < 1e-14) return Vec2(radius_, 0);
      return p * (radius_ / r);
    }
    Real best2 = 1e300;
    Vec2 bestp = verts_[0];
    const auto& v = verts_;
    for (size_t k = 0; k < v.size(); ++k) {
      const Vec2& a = v[k];
      const Vec2& b = v[(k + 1) % v.size()];
      Vec2 e = b - a;
      Real t = std::max<Real>(0, std::min<Real>(1, e.dot(p - a) / e.squaredNorm()));
      Vec2 q = a + t * e;
      Real d2 = (p - q).squaredNorm();
      if (d2 < best2) {
        best2 = d2;
        bestp = q;
      }
    }
    return bestp;
  }

  /// Unit outward normal direction at/near p (gradient of the signed distance).
  Vec2 normal(const Vec2& p) const {
    if (shape_ == BodyShape::Disk) {
      Real r = p.norm();
      if (r < 1e-14) return Vec2(1, 0);
      return p / r;
    }
    Vec2 q = closest_boundary_point(p);
    Real sd = signed_distance(p);
    Vec2 dir = p - q;
    Real nn = dir.norm();
    if (nn > 1e-12) return Vec2(sd >= 0 ? dir / nn : Vec2(-dir / nn));
    // on the boundary: use the nearest edge normal
    const auto& v = verts_;
    Real bd = 1e300;
    Vec2 n(1, 0);
    for (size_t k = 0; k < v.size(); ++k) {
      const Vec2& a = v[k];
      const Vec2& b = v[(k + 1) % v.size()];
      Vec2 e = b - a;
      Real len = e.norm();
      Real t = std::max<Real>(0, std::min<Real>(1, e.dot(p - a) / (len * len)));
      Real d2 = (p - (a + t * e)).squaredNorm();
      if (d2 < bd) {
        bd = d2;
        n = Vec2(e.y() / len, -e.x() / len);
      }
    }
    return n;
  }

  /// Boundary quadrature nodes with outward normals and arc weights.
  /// Disk: trapezoid in angle (spectral for smooth integrands).
  std::vector<BoundaryPoint> boundary_quadrature(int npts) const {
    std::vector<BoundaryPoint> q;
    if (shape_ == BodyShape::Disk) {
      q.reserve(npts);
      for (int k = 0; k < npts; ++k) {
        Real th = 2 * kPi * k / npts;
        Vec2 n(std::cos(th), std::sin(th));
        q.push_back({radius_ * n, n, 2 * kPi * radius_ / npts});
      }
      return q;
    }
    // polygon: distribute nodes per edge proportional to length, midpoint rule
    Real per = 0;
    for (size_t k = 0; k < verts_.size(); ++k)
      per += (verts_[(k + 1) % verts_.size()] - verts_[k]).norm();
    for (size_t k = 0; k < verts_.size(); ++k) {
      const Vec2& a = verts_[k];
      const Vec2& b = verts_[(k + 1) % verts_.size()];
      Vec2 e = b - a;
      Real len = e.norm();
      int ne = std::max(1, static_cast<int>(std::round(npts * len / per)));
      Vec2 n(e.y() / len, -e.x() / len);
      for (int m = 0; m < ne; ++m) {
        Real t = (m + Real(0.5)) / ne;
        q.push_back({a + t * e, n, len / ne});
      }
    }
    return q;
  }

  Real perimeter() const {
    if (shape_ == BodyShape::Disk) return 2 * kPi * radius_;
    Real per = 0;
    for (size_t k = 0; k < verts_.size(); ++k)
      per += (verts_[(k + 1) % verts_.size()] - verts_[k]).norm();
    return per;
  }

 private:
  BodyShape shape_ = BodyShape::Disk;
  Real radius_ = 1;
  Real density_ = 1;
  Real area_ = 0;
  Real inertia_ = 0;
  Vec2 centroid_ = Vec2::Zero();
  std::vector<Vec2> verts_;
};

// ============================================================================
// Masks and strips
// ============================================================================

/// Signed distance sampled at cell centers.
inline ScalarField distance_field(const Grid& g, const BodyGeometry& body) {
  ScalarField d(g);
  d.fill([&](Real x, Real y) { return body.signed_distance(Vec2(x, y)); });
  return d;
}

/// Near-boundary strip of width c*nu on the fluid side.
struct StripSpec {
  Real c = 1;
  Real nu = 0;
  Real width() const { return c * nu; }
};

struct StripMask {
  ScalarField indicator;  // 1 on cells with 0 < d < width, else 0
  Real width = 0;
  int cells = 0;
  bool under_resolved = false;  // width < 2h
};

inline StripMask strip_mask(const Grid& g, const BodyGeometry& body, const StripSpec& s) {
  StripMask m{ScalarField(g), s.width(), 0, s.width() < 2 * g.h};
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Real d = body.signed_distance(g.center(i, j));
      if (d > 0 && d < m.width) {
        m.indicator(i, j) = 1;
        ++m.cells;
      }
    }
  return m;
}

/// 1 on fluid cells (d > 0), else 0.
inline ScalarField fluid_mask(const Grid& g, const BodyGeometry& body) {
  ScalarField m(g);
  m.fill([&](Real x, Real y) { return body.signed_distance(Vec2(x, y)) > 0 ? Real(1) : Real(0); });
  return m;
}

/// 1 on body cells (d < 0), else 0.
inline ScalarField body_mask(const Grid& g, const BodyGeometry& body) {
  ScalarField m(g);
  m.fill([&](Real x, Real y) { return body.signed_distance(Vec2(x, y)) < 0 ? Real(1) : Real(0); });
  return m;
}

}  // namespace kfsi
