#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stokeshom/config.hpp"

namespace fs = std::filesystem;
using namespace shom;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STOKES_HOMOG_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.json";
  std::ofstream os(p);
  os << body;
  return p;
}

const char* kSmallConfig = R"json({
  "cell": {"obstacle": "square", "half_width": 0.25},
  "coefficients": {"a11": "1", "a12": "0", "a22": "1", "theta": "1",
                   "f": ["2+sin(2*pi*y2)", "0"], "alpha": 1.0, "alpha0": 1.0},
  "mesh": {"h_cell": 0.1, "h_macro": 0.125, "h_micro_factor": 0.25},
  "sweep": ["1/4", "1/8"],
  "output": {"directory": "OUTDIR", "vtk": false, "csv": true, "json": true},
  "seed": 7
})json";

std::string small_config(const fs::path& outdir) {
  std::string s = kSmallConfig;
  s.replace(s.find("OUTDIR"), 6, outdir.string());
  return s;
}

}  // namespace

TEST_CASE("config parsing and validation errors carry json pointers") {
  CHECK_THROWS_AS(RunConfig::parse("{"), ConfigError);
  try {
    RunConfig::parse(R"json({"cell": {"obstacle": "square", "half_width": 0.25},
      "coefficients": {}, "mesh": {}, "sweep": [0.25, 0.5]})json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.json_pointer == "/sweep/1");  // not decreasing
  }
  try {
    RunConfig::parse(R"json({"cell": {"obstacle": "square", "half_width": 0.25},
      "coefficients": {"a11": "bogus("}, "mesh": {}, "sweep": [0.25]})json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.json_pointer == "/coefficients/a11");
  }
  auto ok = RunConfig::parse(small_config("/tmp/x"));
  CHECK(ok.sweep.eps_values.size() == 2);
  CHECK(ok.sweep.eps_values[0] == 0.25);
  CHECK(!ok.digest.empty());
}

TEST_CASE("cli check passes the canonical preset and flags bad scales") {
  const fs::path dir = fs::temp_directory_path() / "shomcli1";
  auto cfgp = write_config(dir, small_config(dir / "out"));
  CHECK(run_cli("check --config " + cfgp.string()) == 0);
  // schema violation: increasing sweep -> exit 2
  auto bad = write_config(dir / "bad", R"json({
    "cell": {"obstacle": "square", "half_width": 0.25},
    "coefficients": {}, "mesh": {}, "sweep": [0.125, 0.25]})json");
  CHECK(run_cli("check --config " + bad.string()) == 2);
}

TEST_CASE("cli mesh and cell emit artifacts") {
  const fs::path dir = fs::temp_directory_path() / "shomcli2";
  fs::remove_all(dir);
  auto cfgp = write_config(dir, small_config(dir / "out"));
  CHECK(run_cli("mesh --config " + cfgp.string()) == 0);
  CHECK(fs::exists(dir / "out" / "unit_cell.mesh"));
  CHECK(fs::exists(dir / "out" / "perforated_0.mesh"));
  CHECK(run_cli("cell --config " + cfgp.string()) == 0);
  CHECK(fs::exists(dir / "out" / "effective.json"));
  const std::string eff = slurp(dir / "out" / "effective.json");
  CHECK(eff.find("theta_tilde") != std::string::npos);
  CHECK(eff.find("config_digest") != std::string::npos);
  CHECK(run_cli("macro --config " + cfgp.string()) == 0);
}

TEST_CASE("cli sweep runs are deterministic byte for byte") {
  const fs::path dir = fs::temp_directory_path() / "shomcli3";
  fs::remove_all(dir);
  auto cfgp = write_config(dir, small_config(dir / "out"));
  REQUIRE(run_cli("sweep --quiet --config " + cfgp.string()) == 0);
  const std::string first = slurp(dir / "out" / "report.csv");
  REQUIRE(!first.empty());
  fs::remove(dir / "out" / "report.csv");
  REQUIRE(run_cli("sweep --quiet --config " + cfgp.string()) == 0);
  const std::string second = slurp(dir / "out" / "report.csv");
  CHECK(first == second);
  // header contract and self-description
  std::istringstream is(first);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "epsilon,holes,fluid_area,l2_vel_err,h1_corrector_err,grad_norm,surf_norm,"
        "pressure_norm,pair_phi1,pair_phi2");
  CHECK(first.find("# stokes_homog") != std::string::npos);
  CHECK(first.find("config=") != std::string::npos);
}

TEST_CASE("cli micro requires eps and writes diagnostics") {
  const fs::path dir = fs::temp_directory_path() / "shomcli4";
  fs::remove_all(dir);
  auto cfgp = write_config(dir, small_config(dir / "out"));
  CHECK(run_cli("micro --eps 0.25 --config " + cfgp.string()) == 0);
}
