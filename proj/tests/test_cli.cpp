#include "xfft/cli.hpp"
#include "xfft/field_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

using namespace xfft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xfft_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Drops the trailing wall_time column, the only non-reproducible one.
std::string without_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

const char* kSphere = R"({
  "grid": {"n": 8, "edge": 1},
  "phases": [
    {"name": "matrix", "young": 1.5, "poisson": 0.25},
    {"name": "fiber", "young": 15, "poisson": 0.3}
  ],
  "background": "matrix",
  "geometry": [{"type": "sphere", "phase": "fiber", "center": [0.5, 0.5, 0.5], "radius": 0.3}],
  "discretization": "xfem",
  "loading": [1, 1, 1, 0, 0, 0],
  "solver": {"scheme": "lcg", "tol": 1e-7, "maxit": 500},
  "outputs": {"fields": true, "vtk": true, "log": true, "study_ns": [4, 8, 16], "metric": "bulk"}
})";

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("a complete config parses") {
  const RunConfig cfg = parse_config(kSphere);
  CHECK(cfg.grid.n == std::array<int, 3>{8, 8, 8});
  CHECK(cfg.assembly.phases.size() == 2);
  CHECK(cfg.assembly.regions.size() == 1);
  CHECK(cfg.assembly.regions[0].inside_phase == 1);
  CHECK(cfg.discretization.enrich);
  CHECK(cfg.loading(0) == 1.0);
  CHECK(cfg.solver.tol == 1e-7);
  CHECK(cfg.outputs.study_ns == std::vector<int>{4, 8, 16});
  CHECK(cfg.outputs.vtk);
}

TEST_CASE("grid counts and lengths may be given per axis") {
  const auto cfg = parse_config(replace(kSphere, R"("grid": {"n": 8, "edge": 1})",
                                        R"("grid": {"n": [4, 6, 8], "lengths": [1, 1.5, 2]})"));
  CHECK(cfg.grid.n == std::array<int, 3>{4, 6, 8});
  CHECK(cfg.grid.length[2] == 2.0);
}

TEST_CASE("config errors carry the line of the offending entry") {
  CHECK(error_line(replace(kSphere, R"("maxit": 500)", R"("maxit": 500, "colour": 1)")) == 11);
  CHECK(error_line(replace(kSphere, R"("phase": "fiber")", R"("phase": "glass")")) == 8);
  CHECK(error_line(replace(kSphere, R"("poisson": 0.3)", R"("poisson": 0.5)")) == 5);
  CHECK(error_line(replace(kSphere, R"("loading": [1, 1, 1, 0, 0, 0])", R"("loading": [1, 1, 1])")) == 10);
  CHECK(error_line(replace(kSphere, R"("scheme": "lcg")", R"("scheme": "newton")")) == 11);
  CHECK(error_line(replace(kSphere, R"("type": "sphere")", R"("type": "torus")")) == 8);
  CHECK(error_line(replace(kSphere, R"("metric": "bulk")", R"("metric": "stress:9")")) == 12);
  CHECK(error_line(replace(kSphere, R"("tol": 1e-7)", R"("tol": -1)")) == 11);
  CHECK(error_line(replace(kSphere, "\"edge\": 1}", "\"edge\": 1},,")) == 2);
  CHECK(error_line(replace(kSphere, R"("discretization": "xfem")", R"("discretization": "q1")")) == 9);
}

TEST_CASE("missing keys and bad grids are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"phases": [{"name": "a", "young": 1, "poisson": 0}], "loading": [0,0,0,0,0,0]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kSphere, R"("n": 8)", R"("n": 1)")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("stress component metric") {
  const auto cfg = parse_config(replace(kSphere, R"("metric": "bulk")", R"("metric": "stress:3")"));
  CHECK(cfg.outputs.metric == SweepMetric::StressComponent);
  CHECK(cfg.outputs.stress_component == 3);
}

TEST_CASE("field dump round trip is exact") {
  const fs::path dir = scratch("field");
  std::vector<double> data(2 * 3 * 4 * 6);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::sin(double(i)) * std::pow(10.0, double(i % 40) - 20);
  data[5] = std::numeric_limits<double>::denorm_min();
  data[7] = -0.0;
  data[9] = std::numeric_limits<double>::infinity();
  write_field(dir / "f", {"stress", {2, 3, 4}, 6, "voxel", "MPa"}, data);
  const Field f = read_field(dir / "f");
  CHECK(f.descriptor.dims == std::array<int, 3>{2, 3, 4});
  CHECK(f.descriptor.components == 6);
  CHECK(f.descriptor.location == "voxel");
  CHECK(f.descriptor.units == "MPa");
  REQUIRE(f.data.size() == data.size());
  CHECK(std::memcmp(f.data.data(), data.data(), data.size() * sizeof(double)) == 0);
  CHECK(fs::file_size(dir / "f.bin") == data.size() * 8);

  CHECK_THROWS(write_field(dir / "g", {"x", {2, 2, 2}, 3, "node", ""}, data));
  fs::resize_file(dir / "f.bin", 16);
  CHECK_THROWS(read_field(dir / "f"));
}

TEST_CASE("solve writes summary, log and fields") {
  const fs::path dir = scratch("solve");
  std::ostringstream os;
  const RunConfig cfg = parse_config(kSphere);
  CHECK(run_solve(cfg, dir, os) == kExitOk);
  for (const char* f : {"summary.json", "convergence.csv", "displacement.bin", "displacement.json", "strain.bin",
                        "stress.json", "fields.vtk"})
    CHECK(fs::exists(dir / f));
  const auto summary = nlohmann::json::parse(read_text(dir / "summary.json"));
  CHECK(summary["converged"].get<bool>());
  CHECK(summary["average_stress"].size() == 6);
  CHECK(summary["iterations"].get<int>() > 0);
  CHECK(read_text(dir / "convergence.csv").rfind("iteration,res,res_rel,wall_time\n", 0) == 0);
  const Field u = read_field(dir / "displacement");
  CHECK(u.data.size() == 3 * 512);
  CHECK(read_text(dir / "fields.vtk").find("DIMENSIONS 9 9 9") != std::string::npos);
}

TEST_CASE("homogeneous solve reports C ebar with no iteration") {
  const fs::path dir = scratch("homogeneous");
  const std::string text = R"({"grid": {"n": 4, "edge": 1},
    "phases": [{"name": "s", "young": 1.5, "poisson": 0.25}],
    "loading": [0.3, -0.1, 0.2, 0.05, -0.07, 0.11]})";
  std::ostringstream os;
  CHECK(run_solve(parse_config(text), dir, os) == kExitOk);
  const auto summary = nlohmann::json::parse(read_text(dir / "summary.json"));
  Strain6 e;
  e << 0.3, -0.1, 0.2, 0.05, -0.07, 0.11;
  const Vec6 expected = iso_stiffness({1.5, 0.25}) * e;
  for (int k = 0; k < 6; ++k) CHECK(summary["average_stress"][k].get<double>() == doctest::Approx(expected(k)).epsilon(1e-14));
  CHECK(summary["iterations"].get<int>() == 0);
}

TEST_CASE("non-converged solve exits with status 3") {
  RunConfig cfg = parse_config(kSphere);
  cfg.solver.maxit = 2;
  cfg.outputs.fields = cfg.outputs.vtk = false;
  std::ostringstream os;
  CHECK(run_solve(cfg, scratch("nonconv"), os) == kExitNotConverged);
}

TEST_CASE("identical runs give identical logs apart from wall time") {
  const RunConfig cfg = parse_config(kSphere);
  std::ostringstream os;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_solve(cfg, a, os);
  run_solve(cfg, b, os);
  const std::string la = read_text(a / "convergence.csv");
  CHECK(la.size() > 40);
  CHECK(without_wall_time(la) == without_wall_time(read_text(b / "convergence.csv")));
  const Field fa = read_field(a / "stress"), fb = read_field(b / "stress");
  CHECK(fa.data == fb.data);
}

TEST_CASE("sweep writes rows and a slope, or warns without one") {
  RunConfig cfg = parse_config(kSphere);
  cfg.outputs.reference = 1.9;
  std::ostringstream os;
  const fs::path dir = scratch("sweep");
  CHECK(run_sweep(cfg, dir, os) == kExitOk);
  const std::string csv = read_text(dir / "study.csv");
  CHECK(csv.rfind("n,h,value,error,iterations,converged,wall_time,enriched_nodes\n", 0) == 0);
  CHECK(csv.find("\n4,") != std::string::npos);
  CHECK(csv.find("\n16,") != std::string::npos);
  CHECK(csv.find("slope,") != std::string::npos);

  cfg.outputs.study_ns = {8};
  const fs::path single = scratch("sweep_single");
  CHECK(run_sweep(cfg, single, os) == kExitOk);
  CHECK(read_text(single / "study.csv").find("slope,nan") != std::string::npos);
}

TEST_CASE("overrides replace tolerance and scheme") {
  SolverConfig s;
  apply_overrides(s, {1e-4, Scheme::BarzilaiBorwein});
  CHECK(s.tol == 1e-4);
  CHECK(s.scheme == Scheme::BarzilaiBorwein);
  CHECK_THROWS_AS(apply_overrides(s, {-1.0, std::nullopt}), std::invalid_argument);
}

TEST_CASE("symbol dump writes the half spectrum") {
  const fs::path dir = scratch("symbol");
  std::ostringstream os;
  CHECK(run_symbol_dump(Grid::cube(4, 1.0), dir, os) == kExitOk);
  const Field f = read_field(dir / "symbol");
  CHECK(f.descriptor.dims == std::array<int, 3>{3, 4, 4});
  CHECK(f.descriptor.components == 9);
  for (int k = 0; k < 9; ++k) CHECK(f.data[k] == 0.0);
}

TEST_CASE("built-in validations pass") {
  SolverConfig cfg;
  CHECK(validate_homogeneous(4, cfg).passed);
  const auto rep = validate_hashin(16, cfg);
  CHECK(rep.passed);
  CHECK(format_report(rep).rfind("PASS hashin:", 0) == 0);
}
