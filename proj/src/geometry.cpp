#include "stokeshom/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace shom {

namespace {

constexpr double kTol = 1e-12;

// Exact conversion of the obstacle to rational vertices; FractionOverflow
// propagates to the caller, which falls back to the double path.
std::vector<Vec2<Fraction>> to_exact(const std::vector<Vec2d>& poly) {
  std::vector<Vec2<Fraction>> out;
  out.reserve(poly.size());
  for (const auto& p : poly) {
    Vec2<Fraction> q;
    q << Fraction::from_double(p.x()), Fraction::from_double(p.y());
    out.push_back(q);
  }
  return out;
}

bool segments_properly_intersect(const Vec2d& a, const Vec2d& b, const Vec2d& c, const Vec2d& d) {
  auto cross = [](const Vec2d& u, const Vec2d& v) { return u.x() * v.y() - u.y() * v.x(); };
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double signed_area(const std::vector<Vec2d>& poly) { return polygon_area<double>(poly); }

}  // namespace

CellGeometry CellGeometry::square(double half_width) {
  CellGeometry c;
  c.obstacle = {Vec2d(half_width, half_width), Vec2d(-half_width, half_width),
                Vec2d(-half_width, -half_width), Vec2d(half_width, -half_width)};
  c.validate();
  return c;
}

CellGeometry CellGeometry::regular_polygon(double radius, int sides) {
  if (sides < 3) throw GeometryError("regular polygon needs at least 3 sides");
  CellGeometry c;
  c.obstacle.reserve(sides);
  // Generate the first quadrant and complete by exact 90-degree rotations so
  // that 4|sides inputs are bit-exactly fourfold symmetric.
  if (sides % 4 == 0) {
    const int q = sides / 4;
    std::vector<Vec2d> first;
    for (int i = 0; i < q; ++i) {
      const double a = 2.0 * M_PI * i / sides;
      first.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    for (const auto& p : first) c.obstacle.emplace_back(p.x(), p.y());
    for (const auto& p : first) c.obstacle.emplace_back(-p.y(), p.x());
    for (const auto& p : first) c.obstacle.emplace_back(-p.x(), -p.y());
    for (const auto& p : first) c.obstacle.emplace_back(p.y(), -p.x());
  } else {
    for (int i = 0; i < sides; ++i) {
      const double a = 2.0 * M_PI * i / sides;
      c.obstacle.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
  }
  c.validate();
  return c;
}

void CellGeometry::validate() const {
  if (obstacle.empty()) return;  // "no obstacle" is a valid configuration
  if (obstacle.size() < 3) throw GeometryError("obstacle polygon needs at least 3 vertices");
  for (const auto& p : obstacle) {
    if (std::abs(p.x()) >= 0.5 || std::abs(p.y()) >= 0.5)
      throw GeometryError("obstacle vertex not strictly inside the unit cell");
  }
  const double a = signed_area(obstacle);
  if (a <= 0.0) throw GeometryError("obstacle polygon must be counterclockwise with positive area");
  const std::size_t n = obstacle.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // skip edges sharing a vertex
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(obstacle[i], obstacle[(i + 1) % n], obstacle[j],
                                      obstacle[(j + 1) % n]))
        throw GeometryError("obstacle polygon self-intersects");
    }
  }
}

namespace {

// Strict containment of eps*(k+T) in (0,L1)x(0,L2) via the vertex bounding
// box (the rectangle is convex, so vertex containment decides it).
template <class S>
bool contained(const std::vector<Vec2<S>>& poly, long kx, long ky, const S& eps, const S& L1,
               const S& L2, const S& tol) {
  for (const auto& p : poly) {
    const S x = eps * (p.x() + S(kx));
    const S y = eps * (p.y() + S(ky));
    if (!(x > tol && x < L1 - tol && y > tol && y < L2 - tol)) return false;
  }
  return true;
}

// Area of eps*(k+T) clipped to the closed domain rectangle.
template <class S>
S clipped_area(const std::vector<Vec2<S>>& poly, long kx, long ky, const S& eps, const S& L1,
               const S& L2) {
  std::vector<Vec2<S>> q;
  q.reserve(poly.size());
  for (const auto& p : poly) {
    Vec2<S> v;
    v << eps * (p.x() + S(kx)), eps * (p.y() + S(ky));
    q.push_back(v);
  }
  q = clip_halfplane<S>(q, 0, S(0), false);
  q = clip_halfplane<S>(q, 0, L1, true);
  q = clip_halfplane<S>(q, 1, S(0), false);
  q = clip_halfplane<S>(q, 1, L2, true);
  if (q.size() < 3) return S(0);
  return polygon_area<S>(q);
}

struct ScanResult {
  std::vector<std::array<long, 2>> members;
  std::vector<std::array<long, 2>> boundary_members;
  double residual = 0.0;
  double obstacle_area = 0.0;
};

ScanResult scan(const MacroDomain& domain, const CellGeometry& cell, double eps,
                const Fraction* exact_eps) {
  if (!(eps > 0.0) || eps >= std::min(domain.L1, domain.L2))
    throw InvalidScaleError("eps must lie in (0, min(L1, L2)), got " + std::to_string(eps));
  if (!cell.has_obstacle()) return ScanResult{};
  cell.validate();

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : cell.obstacle) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const long kx_lo = static_cast<long>(std::floor(-xmax)) - 1;
  const long kx_hi = static_cast<long>(std::ceil(domain.L1 / eps - xmin)) + 1;
  const long ky_lo = static_cast<long>(std::floor(-ymax)) - 1;
  const long ky_hi = static_cast<long>(std::ceil(domain.L2 / eps - ymin)) + 1;

  // Exact rational inputs where the doubles convert; individual lattice
  // sites that overflow 64-bit rationals fall back to tolerance doubles.
  bool exact_ok = true;
  Fraction fe, fL1, fL2;
  std::vector<Vec2<Fraction>> fpoly;
  try {
    fe = exact_eps ? *exact_eps : Fraction::from_double(eps);
    fL1 = Fraction::from_double(domain.L1);
    fL2 = Fraction::from_double(domain.L2);
    fpoly = to_exact(cell.obstacle);
  } catch (const FractionOverflow&) {
    exact_ok = false;
  }

  ScanResult r;
  double residual = 0.0;
  for (long kx = kx_lo; kx <= kx_hi; ++kx) {
    for (long ky = ky_lo; ky <= ky_hi; ++ky) {
      bool member = false;
      bool decided = false;
      if (exact_ok) {
        try {
          member = contained<Fraction>(fpoly, kx, ky, fe, fL1, fL2, Fraction(0));
          decided = true;
        } catch (const FractionOverflow&) {
        }
      }
      if (!decided)
        member = contained<double>(cell.obstacle, kx, ky, eps, domain.L1, domain.L2, kTol);
      if (member) {
        r.members.push_back({kx, ky});
        continue;
      }
      double area = -1.0;
      if (exact_ok) {
        try {
          area = clipped_area<Fraction>(fpoly, kx, ky, fe, fL1, fL2).to_double();
        } catch (const FractionOverflow&) {
        }
      }
      if (area < 0.0)
        area = std::max(0.0, clipped_area<double>(cell.obstacle, kx, ky, eps, domain.L1,
                                                  domain.L2));
      if (area > 0.0) {
        r.boundary_members.push_back({kx, ky});
        residual += area;
      }
    }
  }
  r.residual = residual;
  try {
    r.obstacle_area = exact_ok ? polygon_area<Fraction>(fpoly).to_double()
                               : polygon_area<double>(cell.obstacle);
  } catch (const FractionOverflow&) {
    r.obstacle_area = polygon_area<double>(cell.obstacle);
  }
  return r;
}

}  // namespace

HoleLattice hole_lattice(const MacroDomain& domain, const CellGeometry& cell, double eps) {
  ScanResult r = scan(domain, cell, eps, nullptr);
  HoleLattice lat;
  lat.eps = eps;
  lat.members = std::move(r.members);
  lat.boundary_members = std::move(r.boundary_members);
  return lat;
}

HoleLattice hole_lattice(const MacroDomain& domain, const CellGeometry& cell, const Fraction& eps) {
  ScanResult r = scan(domain, cell, eps.to_double(), &eps);
  HoleLattice lat;
  lat.eps = eps.to_double();
  lat.members = std::move(r.members);
  lat.boundary_members = std::move(r.boundary_members);
  return lat;
}

double residual_measure(const MacroDomain& domain, const CellGeometry& cell, double eps) {
  return scan(domain, cell, eps, nullptr).residual;
}

LatticeMeasures lattice_measures(const MacroDomain& domain, const CellGeometry& cell, double eps) {
  ScanResult r = scan(domain, cell, eps, nullptr);
  LatticeMeasures m{};
  m.hole_area = static_cast<double>(r.members.size()) * eps * eps * r.obstacle_area;
  m.residual = r.residual;
  m.fluid_area = domain.area() - m.hole_area;
  m.q_eps_area = domain.area() - m.hole_area - m.residual;
  return m;
}

CellMeasures indicator_means(const CellGeometry& cell) {
  CellMeasures m{};
  if (!cell.has_obstacle()) {
    m.area_obstacle = 0.0;
    m.area_fluid = 1.0;
    m.perimeter = 0.0;
    return m;
  }
  if (cell.obstacle.size() < 3) throw GeometryError("degenerate obstacle polygon");
  cell.validate();
  try {
    m.area_obstacle = polygon_area<Fraction>(to_exact(cell.obstacle)).to_double();
  } catch (const FractionOverflow&) {
    m.area_obstacle = polygon_area<double>(cell.obstacle);
  }
  m.area_fluid = 1.0 - m.area_obstacle;
  double per = 0.0;
  const std::size_t n = cell.obstacle.size();
  for (std::size_t i = 0; i < n; ++i)
    per += (cell.obstacle[(i + 1) % n] - cell.obstacle[i]).norm();
  m.perimeter = per;
  return m;
}

bool in_theta(const CellGeometry& cell, const Vec2d& y) {
  if (!cell.has_obstacle()) return false;
  // reduce to the cell containing y
  const double rx = y.x() - std::round(y.x());
  const double ry = y.y() - std::round(y.y());
  // closed-polygon membership by crossing count with boundary tolerance
  const std::size_t n = cell.obstacle.size();
  // boundary proximity counts as inside (Theta is closed)
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2d a = cell.obstacle[i];
    const Vec2d b = cell.obstacle[(i + 1) % n];
    const Vec2d d = b - a;
    const double len2 = d.squaredNorm();
    const double t = std::clamp(((Vec2d(rx, ry) - a).dot(d)) / len2, 0.0, 1.0);
    if ((Vec2d(rx, ry) - (a + t * d)).norm() <= kTol) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2d& pi = cell.obstacle[i];
    const Vec2d& pj = cell.obstacle[j];
    if ((pi.y() > ry) != (pj.y() > ry)) {
      const double xint = pj.x() + (ry - pj.y()) / (pi.y() - pj.y()) * (pi.x() - pj.x());
      if (rx < xint) inside = !inside;
    }
  }
  return inside;
}

bool in_unit_cell(const Vec2d& y) {
  return std::abs(y.x()) < 0.5 && std::abs(y.y()) < 0.5;
}

bool in_y_star(const CellGeometry& cell, const Vec2d& y) {
  return in_unit_cell(y) && !in_theta(cell, y);
}

}  // namespace shom
