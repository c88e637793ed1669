#include "stokeshom/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace shom {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg, const std::string& pointer) {
  throw ConfigError(msg, pointer);
}

double positive_number(const json& j, const std::string& ptr) {
  if (!j.is_number() || !(j.get<double>() > 0.0)) fail("expected a positive number", ptr);
  return j.get<double>();
}

std::string expr_string(const json& j, const std::string& ptr, bool allow_x = false) {
  if (!j.is_string()) fail("expected an expression string", ptr);
  try {
    parse_expr(j.get<std::string>(), allow_x);
  } catch (const ParseError& e) {
    fail(std::string("expression does not parse: ") + e.what(), ptr);
  }
  return j.get<std::string>();
}

// eps entries accept numbers or "p/q" strings
double eps_value(const json& j, const std::string& ptr) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      const double num = std::stod(s.substr(0, slash));
      const double den = std::stod(s.substr(slash + 1));
      return num / den;
    } catch (const std::exception&) {
      fail("malformed scale value", ptr);
    }
  }
  fail("expected a number or a fraction string", ptr);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid json: ") + e.what(), "/");
  }
  RunConfig cfg;

  if (j.contains("dimension") && j["dimension"].get<int>() != 2)
    fail("only dimension 2 is supported", "/dimension");

  // cell
  if (!j.contains("cell")) fail("missing cell", "/cell");
  const json& cell = j["cell"];
  const std::string kind = cell.value("obstacle", "");
  if (kind == "square") {
    if (!cell.contains("half_width")) fail("square obstacle needs half_width", "/cell/half_width");
    const double hw = positive_number(cell["half_width"], "/cell/half_width");
    if (hw >= 0.5) fail("obstacle must fit strictly inside the cell", "/cell/half_width");
    cfg.sweep.cell = CellGeometry::square(hw);
  } else if (kind == "regular_polygon") {
    const double r = positive_number(cell.value("radius", json()), "/cell/radius");
    const int sides = cell.value("sides", 0);
    if (sides < 3) fail("regular polygon needs at least 3 sides", "/cell/sides");
    if (r >= 0.5) fail("obstacle must fit strictly inside the cell", "/cell/radius");
    cfg.sweep.cell = CellGeometry::regular_polygon(r, sides);
  } else if (kind == "polygon") {
    if (!cell.contains("vertices") || !cell["vertices"].is_array())
      fail("polygon obstacle needs a vertex list", "/cell/vertices");
    CellGeometry g;
    int idx = 0;
    for (const auto& v : cell["vertices"]) {
      if (!v.is_array() || v.size() != 2)
        fail("vertex must be [x, y]", "/cell/vertices/" + std::to_string(idx));
      g.obstacle.emplace_back(v[0].get<double>(), v[1].get<double>());
      ++idx;
    }
    try {
      g.validate();
    } catch (const GeometryError& e) {
      fail(e.what(), "/cell/vertices");
    }
    cfg.sweep.cell = g;
  } else if (kind == "none") {
    cfg.sweep.cell = CellGeometry::none();
  } else {
    fail("obstacle must be square, regular_polygon, polygon, or none", "/cell/obstacle");
  }

  // coefficients
  if (!j.contains("coefficients")) fail("missing coefficients", "/coefficients");
  const json& co = j["coefficients"];
  const std::string a11 = expr_string(co.value("a11", json("1")), "/coefficients/a11");
  const std::string a12 = expr_string(co.value("a12", json("0")), "/coefficients/a12");
  const std::string a22 = expr_string(co.value("a22", json("1")), "/coefficients/a22");
  const std::string th = expr_string(co.value("theta", json("1")), "/coefficients/theta");
  std::string f1 = "1", f2 = "0";
  if (co.contains("f")) {
    if (!co["f"].is_array() || co["f"].size() != 2)
      fail("f must be a list of two expressions", "/coefficients/f");
    f1 = expr_string(co["f"][0], "/coefficients/f/0");
    f2 = expr_string(co["f"][1], "/coefficients/f/1");
  }
  const double alpha = positive_number(co.value("alpha", json(1.0)), "/coefficients/alpha");
  const double alpha0 = positive_number(co.value("alpha0", json(1.0)), "/coefficients/alpha0");
  cfg.sweep.coeffs = CoefficientSet::parse(a11, a12, a22, th, f1, f2, alpha, alpha0);

  // mesh sizes
  if (!j.contains("mesh")) fail("missing mesh", "/mesh");
  const json& mesh = j["mesh"];
  cfg.sweep.h_cell = positive_number(mesh.value("h_cell", json(0.04)), "/mesh/h_cell");
  if (cfg.sweep.h_cell > 0.25) fail("h_cell must be at most 1/4", "/mesh/h_cell");
  cfg.sweep.h_macro = positive_number(mesh.value("h_macro", json(1.0 / 32)), "/mesh/h_macro");
  cfg.sweep.h_micro_factor =
      positive_number(mesh.value("h_micro_factor", json(0.125)), "/mesh/h_micro_factor");
  if (cfg.sweep.h_micro_factor > 0.25)
    fail("h_micro_factor must be at most 1/4", "/mesh/h_micro_factor");

  // macro domain
  if (j.contains("macro_domain")) {
    const json& d = j["macro_domain"];
    cfg.sweep.domain.L1 = positive_number(d.value("L1", json(1.0)), "/macro_domain/L1");
    cfg.sweep.domain.L2 = positive_number(d.value("L2", json(1.0)), "/macro_domain/L2");
  }

  // sweep scales, strictly decreasing in (0,1)
  if (!j.contains("sweep") || !j["sweep"].is_array() || j["sweep"].empty())
    fail("missing sweep scale list", "/sweep");
  double prev = 1.0;
  int idx = 0;
  for (const auto& e : j["sweep"]) {
    const std::string ptr = "/sweep/" + std::to_string(idx);
    const double eps = eps_value(e, ptr);
    if (!(eps > 0.0 && eps < 1.0)) fail("scale must lie in (0,1)", ptr);
    if (eps >= prev) fail("scales must be strictly decreasing", ptr);
    cfg.sweep.eps_values.push_back(eps);
    prev = eps;
    ++idx;
  }

  if (j.contains("verification_forcing")) {
    const json& vf = j["verification_forcing"];
    if (!vf.is_array() || vf.size() != 2)
      fail("verification_forcing must be two x-expressions", "/verification_forcing");
    cfg.sweep.verify_f1 = expr_string(vf[0], "/verification_forcing/0", true);
    cfg.sweep.verify_f2 = expr_string(vf[1], "/verification_forcing/1", true);
  }

  if (j.contains("seed")) cfg.sweep.seed = j["seed"].get<unsigned long>();
  if (j.contains("threads")) cfg.sweep.threads = j["threads"].get<int>();

  if (j.contains("output")) {
    const json& o = j["output"];
    cfg.out_dir = o.value("directory", cfg.out_dir);
    cfg.write_vtk_files = o.value("vtk", true);
    cfg.write_csv = o.value("csv", true);
    cfg.write_json = o.value("json", true);
  }

  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(fnv1a(text)));
  cfg.digest = digest;
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path, "/");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace shom
