#pragma once

#include <array>
#include <optional>
#include <vector>

#include "stokeshom/errors.hpp"
#include "stokeshom/fraction.hpp"

namespace shom {

// Reference obstacle polygon inside the unit cell Y = (-1/2, 1/2)^2.
// An empty vertex list means "no obstacle" (full fluid cell).
struct CellGeometry {
  std::vector<Vec2d> obstacle;  // counterclockwise, simple, strictly inside Y

  static CellGeometry none() { return CellGeometry{}; }
  static CellGeometry square(double half_width);
  static CellGeometry regular_polygon(double radius, int sides);

  bool has_obstacle() const { return !obstacle.empty(); }
  void validate() const;  // throws GeometryError
};

// Axis-aligned macroscopic domain (0, L1) x (0, L2).
struct MacroDomain {
  double L1 = 1.0;
  double L2 = 1.0;
  double area() const { return L1 * L2; }
};

// Integer translates k with eps*(k+T) contained in the open domain (members)
// or meeting it without being contained (boundary_members).
struct HoleLattice {
  double eps = 0.0;
  std::vector<std::array<long, 2>> members;
  std::vector<std::array<long, 2>> boundary_members;
};

struct CellMeasures {
  double area_obstacle;   // |T|
  double area_fluid;      // |Y*| = 1 - |T|
  double perimeter;       // |dT|
};

// Exact partition of |Omega| into contained holes, boundary-hole fragments
// and the remaining fluid set Q^eps.
struct LatticeMeasures {
  double hole_area;      // |members| * eps^2 * |T|
  double residual;       // area of (eps*Theta intersect Omega) minus hole_area
  double q_eps_area;     // |Omega| - hole_area - residual
  double fluid_area;     // |Omega^eps| = |Omega| - hole_area
};

HoleLattice hole_lattice(const MacroDomain& domain, const CellGeometry& cell, double eps);
HoleLattice hole_lattice(const MacroDomain& domain, const CellGeometry& cell, const Fraction& eps);

double residual_measure(const MacroDomain& domain, const CellGeometry& cell, double eps);
LatticeMeasures lattice_measures(const MacroDomain& domain, const CellGeometry& cell, double eps);

CellMeasures indicator_means(const CellGeometry& cell);

// Polygon helpers, templated on the scalar so the same kernels run in exact
// rational or floating arithmetic.
template <class S>
S polygon_area(const std::vector<Vec2<S>>& poly) {
  S two_a(0);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    two_a += p.x() * q.y() - q.x() * p.y();
  }
  return two_a / S(2);
}

// Sutherland-Hodgman clip of a polygon against the halfplane {axis-coord <= c}
// or {>= c} depending on `keep_below`.
template <class S>
std::vector<Vec2<S>> clip_halfplane(const std::vector<Vec2<S>>& poly, int axis, const S& c,
                                    bool keep_below) {
  std::vector<Vec2<S>> out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  auto inside = [&](const Vec2<S>& p) {
    return keep_below ? (p[axis] <= c) : (p[axis] >= c);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2<S>& a = poly[i];
    const Vec2<S>& b = poly[(i + 1) % n];
    const bool ia = inside(a), ib = inside(b);
    if (ia) out.push_back(a);
    if (ia != ib) {
      S t = (c - a[axis]) / (b[axis] - a[axis]);
      Vec2<S> p;
      p[axis] = c;
      p[1 - axis] = a[1 - axis] + t * (b[1 - axis] - a[1 - axis]);
      out.push_back(p);
    }
  }
  return out;
}

// Point membership in the 1-periodic obstacle pattern Theta = union(k+T)
// (closed set) and in the fluid pattern; tolerance-based point-in-polygon.
bool in_theta(const CellGeometry& cell, const Vec2d& y);
bool in_unit_cell(const Vec2d& y);       // open cell Y
bool in_y_star(const CellGeometry& cell, const Vec2d& y);

}  // namespace shom
