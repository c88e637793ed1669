// Command-line driver: homogenization of the perforated Stokes-type flow.
// Subcommands mirror the pipeline stages; all data comes from one JSON
// config, all artifacts land in the output directory.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stokeshom/config.hpp"
#include "stokeshom/vtk.hpp"

namespace fs = std::filesystem;
using namespace shom;

namespace {

struct Cli {
  std::string config_path;
  std::string out_override;
  double eps = 0.0;
  bool quiet = false;
};

std::string meta_line(const RunConfig& cfg) {
  return std::string("stokes_homog ") + kToolVersion + " config=" + cfg.digest;
}

void write_effective_json(const EffectiveTensor& t, const RunConfig& cfg, const fs::path& path) {
  nlohmann::json j;
  j["version"] = kToolVersion;
  j["config_digest"] = cfg.digest;
  j["h_cell"] = t.cell_h;
  j["theta_tilde"] = t.theta_tilde;
  j["f_tilde"] = {t.f_tilde.x(), t.f_tilde.y()};
  auto q = nlohmann::json::array();
  for (int i = 0; i < 2; ++i)
    for (int jj = 0; jj < 2; ++jj)
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h)
          q.push_back({{"i", i}, {"j", jj}, {"k", k}, {"h", h}, {"value", t.q[i][jj][k][h]}});
  j["q"] = q;
  std::ofstream os(path);
  os << j.dump(2) << "\n";
}

EffectiveTensor read_effective_json(const fs::path& path) {
  std::ifstream is(path);
  nlohmann::json j = nlohmann::json::parse(is);
  EffectiveTensor t;
  t.cell_h = j["h_cell"].get<double>();
  t.theta_tilde = j["theta_tilde"].get<double>();
  t.f_tilde = Vec2d(j["f_tilde"][0].get<double>(), j["f_tilde"][1].get<double>());
  for (const auto& e : j["q"])
    t.q[e["i"].get<int>()][e["j"].get<int>()][e["k"].get<int>()][e["h"].get<int>()] =
        e["value"].get<double>();
  return t;
}

int cmd_check(const RunConfig& cfg, bool quiet) {
  auto r = check_hypotheses(cfg.sweep.coeffs, 64, 1000, cfg.sweep.seed);
  if (!quiet) {
    std::cout << "hypotheses check\n"
              << "  min eigenvalue of a: " << r.min_eigenvalue << " (alpha "
              << cfg.sweep.coeffs.alpha << ")\n"
              << "  min theta:           " << r.min_theta << " (alpha0 "
              << cfg.sweep.coeffs.alpha0 << ")\n"
              << "  periodicity defect:  " << r.max_periodicity_defect << "\n";
  }
  if (r.ellipticity_ok && r.theta_ok && !r.periodicity_ok &&
      r.max_periodicity_defect <= 1e-6) {
    std::cerr << "warning: periodicity defect " << r.max_periodicity_defect
              << " above 1e-9, tolerated up to 1e-6\n";
    return 0;
  }
  if (!r.pass()) {
    std::cerr << "check: hypotheses failed\n";
    return 3;
  }
  if (!quiet) std::cout << "  pass\n";
  return 0;
}

int cmd_mesh(const RunConfig& cfg, const fs::path& out) {
  auto cellmesh = mesh_unit_cell(cfg.sweep.cell, cfg.sweep.h_cell);
  {
    std::ofstream os(out / "unit_cell.mesh");
    write_mesh(cellmesh, os);
  }
  for (std::size_t i = 0; i < cfg.sweep.eps_values.size(); ++i) {
    const double eps = cfg.sweep.eps_values[i];
    auto m = mesh_perforated(cfg.sweep.domain, cfg.sweep.cell, eps,
                             eps * cfg.sweep.h_micro_factor);
    std::ofstream os(out / ("perforated_" + std::to_string(i) + ".mesh"));
    write_mesh(m, os);
  }
  return 0;
}

int cmd_cell(const RunConfig& cfg, const fs::path& out, bool quiet) {
  auto sol = solve_cell_problems(cfg.sweep.cell, cfg.sweep.coeffs, cfg.sweep.h_cell);
  auto tensor = effective_tensor(sol, cfg.sweep.coeffs);
  write_effective_json(tensor, cfg, out / "effective.json");
  if (cfg.write_vtk_files) {
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) {
        std::ofstream os(out / ("corrector_" + std::to_string(i) + std::to_string(k) + ".vtk"));
        write_vtk(*sol.mesh, &sol.chi(i, k), &sol.chi_p[2 * i + k], os, meta_line(cfg));
      }
    }
  }
  if (!quiet) {
    std::cout << "effective tensor written: q_1111 = " << tensor.q[0][0][0][0]
              << ", theta_tilde = " << tensor.theta_tilde << ", f_tilde = ("
              << tensor.f_tilde.x() << ", " << tensor.f_tilde.y() << ")\n";
  }
  return 0;
}

int cmd_micro(const RunConfig& cfg, const fs::path& out, double eps, bool quiet) {
  if (!(eps > 0.0)) {
    std::cerr << "micro: --eps is required\n";
    return 2;
  }
  auto sol = solve_micro(cfg.sweep.domain, cfg.sweep.cell, cfg.sweep.coeffs, eps,
                         eps * cfg.sweep.h_micro_factor);
  if (cfg.write_vtk_files) {
    std::ofstream os(out / "micro.vtk");
    write_vtk(*sol.mesh, &sol.u, &sol.p, os, meta_line(cfg));
  }
  auto n = apriori_norms(sol);
  if (!quiet) {
    std::cout << "micro eps=" << eps << ": grad_l2 = " << n.grad_l2
              << ", eps*surf^2 = " << n.surf << ", pressure_l2 = " << n.pressure_l2 << "\n";
  }
  return 0;
}

int cmd_macro(const RunConfig& cfg, const fs::path& out, bool quiet) {
  EffectiveTensor tensor;
  const fs::path eff = out / "effective.json";
  if (fs::exists(eff)) {
    tensor = read_effective_json(eff);
  } else {
    auto sol = solve_cell_problems(cfg.sweep.cell, cfg.sweep.coeffs, cfg.sweep.h_cell);
    tensor = effective_tensor(sol, cfg.sweep.coeffs);
    write_effective_json(tensor, cfg, eff);
  }
  auto sol = solve_macro(tensor, cfg.sweep.domain, cfg.sweep.h_macro);
  if (cfg.write_vtk_files) {
    std::ofstream os(out / "macro.vtk");
    write_vtk(*sol.mesh, &sol.u, &sol.p, os, meta_line(cfg));
  }
  if (!quiet)
    std::cout << "macro solve: |u0|_L2 = " << field_norms(*sol.space, sol.u).l2
              << ", |p0|_L2 = " << pressure_l2(*sol.space, sol.p) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out, bool quiet) {
  auto report = convergence_sweep(cfg.sweep);
  if (cfg.write_csv) {
    std::ofstream os(out / "report.csv");
    write_report_csv(report, os, meta_line(cfg));
  }
  if (cfg.write_json) write_effective_json(report.tensor, cfg, out / "effective.json");
  if (!quiet) {
    std::cout << "sweep finished: " << report.rows.size() << " scales\n";
    for (const auto& r : report.rows)
      std::cout << "  eps = " << r.eps << ": l2_vel_err = " << r.l2_vel_err
                << ", grad_norm = " << r.grad_norm << "\n";
  }
  return 0;
}

int cmd_verify_twoscale(const RunConfig& cfg, bool quiet) {
  (void)quiet;
  const MacroDomain domain = cfg.sweep.domain;
  std::cout << "two-scale pairing tables (volume)\n";
  std::cout << "  case: cos(2 pi x1/eps) vs cos(2 pi y1), limit 0.5\n";
  for (double eps : {0.25, 0.125, 0.0625, 0.03125}) {
    auto field = [eps](const Vec2d& x) { return std::cos(2 * M_PI * x.x() / eps); };
    const double v =
        volume_pairing(domain, field, TwoScaleTest::separable("1", "cos(2*pi*y1)"), eps);
    std::cout << "    eps = " << eps << ": " << v << "\n";
  }
  std::cout << "  case: cos(2 pi x1/eps) vs 1, limit 0\n";
  for (double eps : {0.25, 0.125, 0.0625, 0.03125}) {
    auto field = [eps](const Vec2d& x) { return std::cos(2 * M_PI * x.x() / eps); };
    std::cout << "    eps = " << eps << ": "
              << volume_pairing(domain, field, TwoScaleTest::one(), eps) << "\n";
  }
  if (cfg.sweep.cell.has_obstacle()) {
    const auto cm = indicator_means(cfg.sweep.cell);
    std::cout << "two-scale pairing tables (surface), limit |Omega||dT| = "
              << domain.area() * cm.perimeter << "\n";
    auto one = [](const Vec2d&) { return 1.0; };
    for (double eps : {0.25, 0.125, 0.0625, 0.03125}) {
      auto mesh = mesh_perforated(domain, cfg.sweep.cell, eps, eps / 4);
      std::cout << "    eps = " << eps << ": "
                << surface_pairing(mesh, one, TwoScaleTest::one(), eps) << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization of a Stokes-type flow in a periodically perforated domain"};
  app.require_subcommand(1);
  app.fallthrough();

  Cli cli;
  app.add_option("--config", cli.config_path, "JSON configuration")->required();
  app.add_option("--out", cli.out_override, "output directory (overrides the config)");
  app.add_flag("--quiet", cli.quiet, "suppress progress output");

  auto* sc_check = app.add_subcommand("check", "validate the coefficient hypotheses");
  auto* sc_mesh = app.add_subcommand("mesh", "emit cell and perforated meshes");
  auto* sc_cell = app.add_subcommand("cell", "solve the cell problems, write effective.json");
  auto* sc_micro = app.add_subcommand("micro", "solve the oscillating problem at one scale");
  sc_micro->add_option("--eps", cli.eps, "hole scale")->required();
  auto* sc_macro = app.add_subcommand("macro", "solve the homogenized problem");
  auto* sc_sweep = app.add_subcommand("sweep", "full convergence sweep, write report.csv");
  auto* sc_verify = app.add_subcommand("verify-twoscale", "analytic two-scale pairing tables");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    cfg = RunConfig::load(cli.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  if (!cli.out_override.empty()) cfg.out_dir = cli.out_override;
  fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);

  try {
    if (sc_check->parsed()) return cmd_check(cfg, cli.quiet);
    if (sc_mesh->parsed()) return cmd_mesh(cfg, out);
    if (sc_cell->parsed()) return cmd_cell(cfg, out, cli.quiet);
    if (sc_micro->parsed()) return cmd_micro(cfg, out, cli.eps, cli.quiet);
    if (sc_macro->parsed()) return cmd_macro(cfg, out, cli.quiet);
    if (sc_sweep->parsed()) return cmd_sweep(cfg, out, cli.quiet);
    if (sc_verify->parsed()) return cmd_verify_twoscale(cfg, cli.quiet);
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
