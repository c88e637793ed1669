#include "stokeshom/twoscale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <thread>

namespace shom {

double TwoScaleTest::eval(const Vec2d& x, const Vec2d& y) const {
  if (general) return general->eval(EvalPoint{x.x(), x.y(), y.x(), y.y()});
  double v = 1.0;
  if (x_part) v *= x_part->eval(EvalPoint{x.x(), x.y(), 0.0, 0.0});
  if (y_part) v *= y_part->eval(EvalPoint{0.0, 0.0, y.x(), y.y()});
  return v;
}

TwoScaleTest TwoScaleTest::separable(const std::string& xs, const std::string& ys) {
  TwoScaleTest t;
  if (!xs.empty() && xs != "1") t.x_part = parse_expr(xs, true);
  if (!ys.empty() && ys != "1") t.y_part = parse_expr(ys);
  return t;
}

TwoScaleTest TwoScaleTest::from_expr(const std::string& s) {
  TwoScaleTest t;
  t.general = parse_expr(s, true);
  return t;
}

TwoScaleTest TwoScaleTest::one() { return TwoScaleTest{}; }

double volume_pairing(const MacroDomain& domain, const std::function<double(const Vec2d&)>& field,
                      const TwoScaleTest& psi, double eps, double hquad) {
  const double h = hquad > 0 ? hquad : eps / 16.0;
  TriMesh mesh = mesh_rectangle(domain, h);
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const Vec2d x = b[0] * mesh.nodes[tr[0]] + b[1] * mesh.nodes[tr[1]] +
                      b[2] * mesh.nodes[tr[2]];
      total += TriQuadrature::weight[q] * area * field(x) * psi.eval(x, x / eps);
    }
  }
  return total;
}

double volume_pairing_fe(const DofSpace& sp, const Eigen::VectorXd& U, int comp,
                         const TwoScaleTest& psi, double eps) {
  double total = 0.0;
  const TriMesh& mesh = *sp.mesh;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const Vec2d x = b[0] * mesh.nodes[tr[0]] + b[1] * mesh.nodes[tr[1]] +
                      b[2] * mesh.nodes[tr[2]];
      total += TriQuadrature::weight[q] * area * velocity_at(sp, U, t, b)[comp] *
               psi.eval(x, x / eps);
    }
  }
  return total;
}

namespace {
// 2-point Gauss on [0,1]
const double kG2[2] = {0.21132486540518711775, 0.78867513459481288225};
}  // namespace

double limit_volume_pairing(const MacroDomain& domain,
                            const std::function<double(const Vec2d&, const Vec2d&)>& u0,
                            const TwoScaleTest& psi, int cells_y, int cells_x) {
  double total = 0.0;
  const double hx1 = domain.L1 / cells_x, hx2 = domain.L2 / cells_x;
  const double hy = 1.0 / cells_y;
  for (int ix = 0; ix < cells_x; ++ix) {
    for (int jx = 0; jx < cells_x; ++jx) {
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const Vec2d x((ix + kG2[a]) * hx1, (jx + kG2[b]) * hx2);
          const double wx = 0.25 * hx1 * hx2;
          double inner = 0.0;
          for (int iy = 0; iy < cells_y; ++iy) {
            for (int jy = 0; jy < cells_y; ++jy) {
              for (int c = 0; c < 2; ++c) {
                for (int d = 0; d < 2; ++d) {
                  const Vec2d y(-0.5 + (iy + kG2[c]) * hy, -0.5 + (jy + kG2[d]) * hy);
                  inner += 0.25 * hy * hy * u0(x, y) * psi.eval(x, y);
                }
              }
            }
          }
          total += wx * inner;
        }
      }
    }
  }
  return total;
}

double surface_pairing(const TriMesh& mesh, const std::function<double(const Vec2d&)>& s,
                       const TwoScaleTest& psi, double eps) {
  double total = 0.0;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag != EdgeTag::Hole) continue;
    const Vec2d a = mesh.nodes[be.a], b = mesh.nodes[be.b];
    const double len = (b - a).norm();
    for (int q = 0; q < EdgeQuadrature::n; ++q) {
      const Vec2d x = a + EdgeQuadrature::point[q] * (b - a);
      total += EdgeQuadrature::weight[q] * len * s(x) * psi.eval(x, x / eps);
    }
  }
  return eps * total;
}

double surface_limit(const MacroDomain& domain, const CellGeometry& cell,
                     const std::function<double(const Vec2d&, const Vec2d&)>& u0,
                     const TwoScaleTest& psi, int cells_x) {
  if (!cell.has_obstacle()) return 0.0;
  const auto& poly = cell.obstacle;
  const int nv = static_cast<int>(poly.size());
  const double hx1 = domain.L1 / cells_x, hx2 = domain.L2 / cells_x;
  double total = 0.0;
  for (int ix = 0; ix < cells_x; ++ix) {
    for (int jx = 0; jx < cells_x; ++jx) {
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const Vec2d x((ix + kG2[a]) * hx1, (jx + kG2[b]) * hx2);
          const double wx = 0.25 * hx1 * hx2;
          double edge_int = 0.0;
          for (int e = 0; e < nv; ++e) {
            const Vec2d pa = poly[e], pb = poly[(e + 1) % nv];
            const double len = (pb - pa).norm();
            const int nseg = std::max(16, static_cast<int>(std::ceil(len / 0.05)));
            for (int sgm = 0; sgm < nseg; ++sgm) {
              const Vec2d qa = pa + (static_cast<double>(sgm) / nseg) * (pb - pa);
              const Vec2d qb = pa + (static_cast<double>(sgm + 1) / nseg) * (pb - pa);
              for (int q = 0; q < EdgeQuadrature::n; ++q) {
                const Vec2d y = qa + EdgeQuadrature::point[q] * (qb - qa);
                edge_int += EdgeQuadrature::weight[q] * (len / nseg) * u0(x, y) * psi.eval(x, y);
              }
            }
          }
          total += wx * edge_int;
        }
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// corrector machinery
// ---------------------------------------------------------------------------

CorrectorField::CorrectorField(const MacroSolution& macro, const CellSolution& cell, double eps)
    : macro_(&macro), cell_(&cell), eps_(eps), macro_loc_(*macro.mesh), cell_loc_(*cell.mesh) {}

namespace {
Vec2d wrap_cell(const Vec2d& x, double eps) {
  const double w1 = x.x() / eps, w2 = x.y() / eps;
  return Vec2d(w1 - std::round(w1), w2 - std::round(w2));
}
}  // namespace

Vec2d CorrectorField::u0(const Vec2d& x) const {
  std::array<double, 3> b{};
  const int t = macro_loc_.locate(x, b);
  if (t < 0) return Vec2d(0, 0);
  return velocity_at(*macro_->space, macro_->u, t, b);
}

Eigen::Matrix2d CorrectorField::grad_u0(const Vec2d& x) const {
  std::array<double, 3> b{};
  const int t = macro_loc_.locate(x, b);
  if (t < 0) return Eigen::Matrix2d::Zero();
  return velocity_grad_at(*macro_->space, macro_->u, t, b);
}

double CorrectorField::p0(const Vec2d& x) const {
  std::array<double, 3> b{};
  const int t = macro_loc_.locate(x, b);
  if (t < 0) return 0.0;
  return pressure_at(*macro_->space, macro_->p, t, b);
}

Vec2d CorrectorField::value(const Vec2d& x) const {
  Vec2d v;
  Eigen::Matrix2d g;
  value_grad(x, v, g);
  return v;
}

void CorrectorField::value_grad(const Vec2d& x, Vec2d& val, Eigen::Matrix2d& grad) const {
  std::array<double, 3> bm{};
  const int tm = macro_loc_.locate(x, bm);
  if (tm < 0) {
    val = Vec2d(0, 0);
    grad = Eigen::Matrix2d::Zero();
    return;
  }
  val = velocity_at(*macro_->space, macro_->u, tm, bm);
  grad = velocity_grad_at(*macro_->space, macro_->u, tm, bm);

  const Vec2d y = wrap_cell(x, eps_);
  std::array<double, 3> bc{};
  const int tc = cell_loc_.locate(y, bc);
  if (tc < 0) return;  // inside the reference obstacle: corrector off

  double H[2][2][2];
  velocity_hessian_at(*macro_->space, macro_->u, tm, H);
  const Eigen::Matrix2d G = grad;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd& chi = cell_->chi(i, k);
      const Vec2d cv = velocity_at(*cell_->space, chi, tc, bc);
      const Eigen::Matrix2d cg = velocity_grad_at(*cell_->space, chi, tc, bc);
      for (int c = 0; c < 2; ++c) {
        val[c] -= eps_ * G(k, i) * cv[c];
        for (int j = 0; j < 2; ++j) {
          // d/dx_j [eps * G(k,i)(x) chi^c(x/eps)] =
          //   eps * H^k_{ij} chi^c + G(k,i) dchi^c/dy_j
          grad(c, j) -= eps_ * H[k][i][j] * cv[c] + G(k, i) * cg(c, j);
        }
      }
    }
  }
}

CorrectorErrors corrector_errors(const MicroSolution& micro, const CorrectorField& corr) {
  CorrectorErrors out;
  const DofSpace& sp = *micro.space;
  const TriMesh& mesh = *micro.mesh;
  double l2 = 0, h1p = 0, h1c = 0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tr = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const Vec2d x = b[0] * mesh.nodes[tr[0]] + b[1] * mesh.nodes[tr[1]] +
                      b[2] * mesh.nodes[tr[2]];
      const double w = TriQuadrature::weight[q] * area;
      const Vec2d ue = velocity_at(sp, micro.u, t, b);
      const Eigen::Matrix2d ge = velocity_grad_at(sp, micro.u, t, b);
      const Vec2d u0 = corr.u0(x);
      const Eigen::Matrix2d g0 = corr.grad_u0(x);
      Vec2d uc;
      Eigen::Matrix2d gc;
      corr.value_grad(x, uc, gc);
      l2 += w * (ue - u0).squaredNorm();
      h1p += w * ((ue - u0).squaredNorm() + (ge - g0).squaredNorm());
      h1c += w * ((ue - uc).squaredNorm() + (ge - gc).squaredNorm());
    }
  }
  out.l2_u0 = std::sqrt(l2);
  out.h1_u0 = std::sqrt(h1p);
  out.h1_corrected = std::sqrt(h1c);
  return out;
}

// ---------------------------------------------------------------------------
// test pairs and the coupled form
// ---------------------------------------------------------------------------

namespace {
// one-dimensional stream factor sin^2(a pi t) * (1 + beta (t - 1/2)): the
// linear tilt breaks the parity that would otherwise decouple whole mode
// families from the pipeline fields
struct StreamFactor {
  int a = 1;
  double beta = 0.0;
  double val(double t) const {
    const double s = std::sin(a * M_PI * t);
    return s * s * (1.0 + beta * (t - 0.5));
  }
  double d1(double t) const {
    const double s = std::sin(a * M_PI * t);
    const double g = s * s, g1 = a * M_PI * std::sin(2 * a * M_PI * t);
    return g1 * (1.0 + beta * (t - 0.5)) + g * beta;
  }
  double d2(double t) const {
    const double g1 = a * M_PI * std::sin(2 * a * M_PI * t);
    const double g2 = 2.0 * a * a * M_PI * M_PI * std::cos(2 * a * M_PI * t);
    return g2 * (1.0 + beta * (t - 0.5)) + 2.0 * g1 * beta;
  }
};
}  // namespace

TestPair seeded_test_pair(std::mt19937_64& rng) {
  auto uni = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  struct Term {
    double c;
    StreamFactor f1, f2;
  };
  auto terms = std::make_shared<std::vector<Term>>();
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b)
      terms->push_back({uni(), StreamFactor{a, uni()}, StreamFactor{b, uni()}});
  TestPair p;
  p.phi0 = [terms](const Vec2d& x) {
    Vec2d v(0, 0);
    for (const auto& t : *terms) {
      v[0] += t.c * t.f1.val(x.x()) * t.f2.d1(x.y());
      v[1] -= t.c * t.f1.d1(x.x()) * t.f2.val(x.y());
    }
    return v;
  };
  p.grad_phi0 = [terms](const Vec2d& x) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    for (const auto& t : *terms) {
      g(0, 0) += t.c * t.f1.d1(x.x()) * t.f2.d1(x.y());
      g(0, 1) += t.c * t.f1.val(x.x()) * t.f2.d2(x.y());
      g(1, 0) -= t.c * t.f1.d2(x.x()) * t.f2.val(x.y());
      g(1, 1) -= t.c * t.f1.d1(x.x()) * t.f2.d1(x.y());
    }
    return g;
  };
  const double s1 = uni(), s2 = uni(), s3 = uni(), s4 = uni();
  p.s = [s1, s2, s3, s4](const Vec2d& x) {
    const double base = s1 * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()) +
                        s2 * x.x() * (1 - x.x()) * x.y() * (1 - x.y());
    return base * (1.0 + s3 * (x.x() - 0.5) + s4 * (x.y() - 0.5));
  };
  // w = curl_y xi with xi periodic; single-frequency and mixed modes
  const double d1 = uni(), d2 = uni(), d3 = uni(), d4 = uni();
  p.grad_w = [d1, d2, d3, d4](const Vec2d& y) {
    const double c1 = std::cos(2 * M_PI * y.x()), s1y = std::sin(2 * M_PI * y.x());
    const double c2 = std::cos(2 * M_PI * y.y()), s2y = std::sin(2 * M_PI * y.y());
    // xi = [d1 s1 c2 + d2 c1 s2 + d3 s1 + d4 s2] / (2 pi)
    // w1 = dxi/dy2, w2 = -dxi/dy1
    Eigen::Matrix2d g;
    g(0, 0) = 2 * M_PI * (-d1 * c1 * s2y - d2 * s1y * c2);
    g(0, 1) = 2 * M_PI * (-d1 * s1y * c2 - d2 * c1 * s2y - d4 * s2y);
    g(1, 0) = 2 * M_PI * (d1 * s1y * c2 + d2 * c1 * s2y + d3 * s1y);
    g(1, 1) = 2 * M_PI * (d1 * c1 * s2y + d2 * s1y * c2);
    return g;
  };
  return p;
}

double two_scale_residual(const MacroSolution& macro, const CellSolution& cell,
                          const CoefficientSet& coeffs, const TestPair& pair,
                          const std::function<Vec2d(const Vec2d&)>& f_tilde) {
  // y-side tensors over the fluid cell
  double A0[2][2] = {};
  double C[2][2][2][2] = {};  // C[i][k][m][h]
  double E[2][2] = {};        // E[j][k]
  double F[2][2] = {};        // F[m][h]
  {
    const DofSpace& csp = *cell.space;
    const TriMesh& cm = *cell.mesh;
    for (int t = 0; t < static_cast<int>(cm.triangles.size()); ++t) {
      const auto& tr = cm.triangles[t];
      const double area = cm.triangle_area(t);
      for (int q = 0; q < TriQuadrature::n; ++q) {
        const auto& b = TriQuadrature::bary[q];
        const double w = TriQuadrature::weight[q] * area;
        const Vec2d y = b[0] * cm.nodes[tr[0]] + b[1] * cm.nodes[tr[1]] + b[2] * cm.nodes[tr[2]];
        const Eigen::Matrix2d am = coeffs.a_at(y.x(), y.y());
        const Eigen::Matrix2d gw = pair.grad_w(y);
        Eigen::Matrix2d gchi[4];
        for (int s = 0; s < 4; ++s) gchi[s] = velocity_grad_at(csp, cell.chi_u[s], t, b);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) A0[i][j] += w * am(i, j);
        for (int i = 0; i < 2; ++i)
          for (int k = 0; k < 2; ++k)
            for (int m = 0; m < 2; ++m)
              for (int hh = 0; hh < 2; ++hh) {
                double v = 0;
                for (int j = 0; j < 2; ++j) v += am(i, j) * gchi[2 * m + hh](k, j);
                C[i][k][m][hh] += w * v;
              }
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            double v = 0;
            for (int i = 0; i < 2; ++i) v += am(i, j) * gw(k, i);
            E[j][k] += w * v;
          }
        for (int m = 0; m < 2; ++m)
          for (int hh = 0; hh < 2; ++hh) {
            double v = 0;
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                  v += am(i, j) * gchi[2 * m + hh](k, j) * gw(k, i);
            F[m][hh] += w * v;
          }
      }
    }
  }
  const double theta_tilde = effective_theta(coeffs, cell.cell);

  // x-side integrals over the macro mesh
  double total = 0.0;
  const DofSpace& msp = *macro.space;
  const TriMesh& mm = *macro.mesh;
  for (int t = 0; t < static_cast<int>(mm.triangles.size()); ++t) {
    const auto& tr = mm.triangles[t];
    const double area = mm.triangle_area(t);
    for (int q = 0; q < TriQuadrature::n; ++q) {
      const auto& b = TriQuadrature::bary[q];
      const double w = TriQuadrature::weight[q] * area;
      const Vec2d x = b[0] * mm.nodes[tr[0]] + b[1] * mm.nodes[tr[1]] + b[2] * mm.nodes[tr[2]];
      const Eigen::Matrix2d G = velocity_grad_at(msp, macro.u, t, b);
      const Vec2d u0 = velocity_at(msp, macro.u, t, b);
      const double p0 = pressure_at(msp, macro.p, t, b);
      const Vec2d f0 = pair.phi0(x);
      const Eigen::Matrix2d gf = pair.grad_phi0(x);
      const double sx = pair.s(x);
      double v = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) v += A0[i][j] * G(k, j) * gf(k, i);
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
          for (int m = 0; m < 2; ++m)
            for (int hh = 0; hh < 2; ++hh) v -= C[i][k][m][hh] * G(hh, m) * gf(k, i);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) v += E[j][k] * G(k, j) * sx;
      for (int m = 0; m < 2; ++m)
        for (int hh = 0; hh < 2; ++hh) v -= F[m][hh] * G(hh, m) * sx;
      v += theta_tilde * u0.dot(f0);
      v -= p0 * (gf(0, 0) + gf(1, 1));
      v -= f_tilde(x).dot(f0);
      total += w * v;
    }
  }
  return total;
}

double two_scale_form(const MacroSolution& ua, const MacroSolution& ub, const CellSolution& cell,
                      const CoefficientSet& coeffs) {
  // a_hat_Omega on two corrector pairs (u0, u1 = -sum du0 chi); the y-side
  // reduces to the effective tensor contraction of the two gradients
  double q[2][2][2][2];
  effective_q(cell, coeffs, q);
  const double theta_tilde = effective_theta(coeffs, cell.cell);
  double total = 0.0;
  const DofSpace& sa = *ua.space;
  const TriMesh& mm = *ua.mesh;
  TriLocator locb(*ub.mesh);
  for (int t = 0; t < static_cast<int>(mm.triangles.size()); ++t) {
    const auto& tr = mm.triangles[t];
    const double area = mm.triangle_area(t);
    for (int qq = 0; qq < TriQuadrature::n; ++qq) {
      const auto& b = TriQuadrature::bary[qq];
      const double w = TriQuadrature::weight[qq] * area;
      const Vec2d x = b[0] * mm.nodes[tr[0]] + b[1] * mm.nodes[tr[1]] + b[2] * mm.nodes[tr[2]];
      const Eigen::Matrix2d Ga = velocity_grad_at(sa, ua.u, t, b);
      const Vec2d va = velocity_at(sa, ua.u, t, b);
      std::array<double, 3> bb{};
      const int tb = locb.locate(x, bb);
      if (tb < 0) continue;
      const Eigen::Matrix2d Gb = velocity_grad_at(*ub.space, ub.u, tb, bb);
      const Vec2d vb = velocity_at(*ub.space, ub.u, tb, bb);
      double v = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            for (int hh = 0; hh < 2; ++hh) v += q[i][j][k][hh] * Gb(hh, j) * Ga(k, i);
      v += theta_tilde * va.dot(vb);
      total += w * v;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// convergence sweep
// ---------------------------------------------------------------------------

ConvergenceReport convergence_sweep(const SweepConfig& cfg) {
  ConvergenceReport report;
  CellSolution cell = solve_cell_problems(cfg.cell, cfg.coeffs, cfg.h_cell);
  report.tensor = effective_tensor(cell, cfg.coeffs);

  const bool verify = !cfg.verify_f1.empty();
  std::function<Vec2d(const Vec2d&)> fx;
  MacroSolution macro;
  if (verify) {
    auto e1 = parse_expr(cfg.verify_f1, true);
    auto e2 = parse_expr(cfg.verify_f2.empty() ? "0" : cfg.verify_f2, true);
    fx = [e1, e2](const Vec2d& x) {
      EvalPoint p{x.x(), x.y(), 0.0, 0.0};
      return Vec2d(e1->eval(p), e2->eval(p));
    };
    const double ystar = indicator_means(cfg.cell).area_fluid;
    macro = solve_macro_forced(report.tensor, cfg.domain, cfg.h_macro,
                               [fx, ystar](const Vec2d& x) -> Vec2d { return ystar * fx(x); });
  } else {
    macro = solve_macro(report.tensor, cfg.domain, cfg.h_macro);
  }

  const TwoScaleTest phi1 = TwoScaleTest::separable("sin(pi*x1)*sin(pi*x2)", "1");
  const TwoScaleTest phi2 = TwoScaleTest::separable("x1*(1-x1)*x2*(1-x2)", "1");
  const TwoScaleTest phi3 = TwoScaleTest::separable("sin(pi*x1)*x2*(1-x2)", "1");

  report.rows.resize(cfg.eps_values.size());
  auto run_one = [&](std::size_t idx) {
    const double eps = cfg.eps_values[idx];
    const double h = eps * cfg.h_micro_factor;
    MicroSolution micro =
        verify ? solve_micro_forced(cfg.domain, cfg.cell, cfg.coeffs, eps, h, fx, true)
               : solve_micro(cfg.domain, cfg.cell, cfg.coeffs, eps, h);
    CorrectorField corr(macro, cell, eps);
    CorrectorErrors err = corrector_errors(micro, corr);
    auto ap = apriori_norms(micro);
    auto lm = lattice_measures(cfg.domain, cfg.cell, eps);

    SweepRow row;
    row.eps = eps;
    row.holes = static_cast<long>(micro.hole_loops.size());
    row.fluid_area = lm.fluid_area;
    row.l2_vel_err = err.l2_u0;
    row.h1_corrector_err = err.h1_corrected;
    row.h1_u0_err = err.h1_u0;
    row.grad_norm = ap.grad_l2;
    row.surf_norm = ap.surf;
    row.pressure_norm = ap.pressure_l2;

    auto pressure_pairing = [&](const TwoScaleTest& phi) {
      // int (p_tilde_eps - p0) phi = int_fluid p_eps phi - int_Omega p0 phi
      double a = 0.0;
      const TriMesh& fm = *micro.mesh;
      for (int t = 0; t < static_cast<int>(fm.triangles.size()); ++t) {
        const auto& tr = fm.triangles[t];
        const double area = fm.triangle_area(t);
        for (int q = 0; q < TriQuadrature::n; ++q) {
          const auto& b = TriQuadrature::bary[q];
          const Vec2d x = b[0] * fm.nodes[tr[0]] + b[1] * fm.nodes[tr[1]] +
                          b[2] * fm.nodes[tr[2]];
          a += TriQuadrature::weight[q] * area * pressure_at(*micro.space, micro.p, t, b) *
               phi.eval(x, x);
        }
      }
      double c = 0.0;
      const TriMesh& mm = *macro.mesh;
      for (int t = 0; t < static_cast<int>(mm.triangles.size()); ++t) {
        const auto& tr = mm.triangles[t];
        const double area = mm.triangle_area(t);
        for (int q = 0; q < TriQuadrature::n; ++q) {
          const auto& b = TriQuadrature::bary[q];
          const Vec2d x = b[0] * mm.nodes[tr[0]] + b[1] * mm.nodes[tr[1]] +
                          b[2] * mm.nodes[tr[2]];
          c += TriQuadrature::weight[q] * area * pressure_at(*macro.space, macro.p, t, b) *
               phi.eval(x, x);
        }
      }
      return a - c;
    };
    row.pair_phi1 = pressure_pairing(phi1);
    row.pair_phi2 = pressure_pairing(phi2);
    row.pair_phi3 = pressure_pairing(phi3);
    report.rows[idx] = row;
  };

  int workers = cfg.threads;
  if (workers <= 0) {
    const char* env = std::getenv("STOKES_HOMOG_THREADS");
    workers = env ? std::atoi(env) : 0;
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  if (workers <= 1 || cfg.eps_values.size() <= 1) {
    for (std::size_t i = 0; i < cfg.eps_values.size(); ++i) run_one(i);
  } else {
    std::size_t next = 0;
    while (next < cfg.eps_values.size()) {
      std::vector<std::future<void>> batch;
      for (int w = 0; w < workers && next < cfg.eps_values.size(); ++w, ++next)
        batch.push_back(std::async(std::launch::async, run_one, next));
      for (auto& f : batch) f.get();
    }
  }
  return report;
}

void write_report_csv(const ConvergenceReport& report, std::ostream& os,
                      const std::string& meta) {
  os << "epsilon,holes,fluid_area,l2_vel_err,h1_corrector_err,grad_norm,surf_norm,"
        "pressure_norm,pair_phi1,pair_phi2\n";
  char buf[512];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.holes,
                  r.fluid_area, r.l2_vel_err, r.h1_corrector_err, r.grad_norm, r.surf_norm,
                  r.pressure_norm, r.pair_phi1, r.pair_phi2);
    os << buf;
  }
  if (!meta.empty()) os << "# " << meta << "\n";
}

}  // namespace shom
