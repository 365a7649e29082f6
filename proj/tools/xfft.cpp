#include "xfft/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>

namespace {

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("XFFT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FFT-preconditioned X-FEM homogenization of periodic elastic cells"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = ".";
  int threads = 0;
  std::optional<double> tol;
  std::string scheme;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (overrides XFFT_THREADS)")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "stopping tolerance override")->check(CLI::PositiveNumber);
    sub->add_option("--scheme", scheme, "iteration scheme: basic, bb, ncg, lcg");
  };

  auto* solve = app.add_subcommand("solve", "solve one cell problem");
  add_common(solve, true);
  auto* sweep = app.add_subcommand("sweep", "resolution study over outputs.study_ns");
  add_common(sweep, true);

  auto* validate = app.add_subcommand("validate", "built-in checks against closed-form results");
  std::string check = "all";
  int n = 0;
  validate->add_option("check", check, "homogeneous, laminate, hashin or all")
      ->check(CLI::IsMember({"homogeneous", "laminate", "hashin", "all"}));
  validate->add_option("-n,--n", n, "voxels per edge")->check(CLI::PositiveNumber);
  add_common(validate, false);

  auto* dump = app.add_subcommand("symbol-dump", "write the Green operator symbol");
  int dump_n = 16;
  dump->add_option("-n,--n", dump_n, "voxels per edge (ignored with --config)")->check(CLI::PositiveNumber);
  add_common(dump, false);

  CLI11_PARSE(app, argc, argv);

  if (const int t = thread_count(threads); t > 0) omp_set_num_threads(t);

  try {
    xfft::Overrides overrides;
    overrides.tol = tol;
    if (!scheme.empty()) overrides.scheme = xfft::parse_scheme(scheme);

    if (solve->parsed() || sweep->parsed()) {
      xfft::RunConfig cfg = xfft::load_config(config_path);
      xfft::apply_overrides(cfg.solver, overrides);
      return solve->parsed() ? xfft::run_solve(cfg, out, std::cout) : xfft::run_sweep(cfg, out, std::cout);
    }

    if (dump->parsed()) {
      const xfft::Grid grid = config_path.empty() ? xfft::Grid::cube(dump_n, 1.0) : xfft::load_config(config_path).grid;
      return xfft::run_symbol_dump(grid, out, std::cout);
    }

    xfft::SolverConfig solver;
    if (!config_path.empty()) solver = xfft::load_config(config_path).solver;
    xfft::apply_overrides(solver, overrides);
    std::vector<xfft::ValidationReport> reports;
    const bool all = check == "all";
    if (all || check == "homogeneous") reports.push_back(xfft::validate_homogeneous(n > 0 ? n : 8, solver));
    if (all || check == "laminate") {
      xfft::SolverConfig tight = solver;
      if (!tol) tight.tol = 1e-12;
      reports.push_back(xfft::validate_laminate(n > 0 ? n : 8, tight, false));
      reports.push_back(xfft::validate_laminate(n > 0 ? n : 8, tight, true));
    }
    if (all || check == "hashin") reports.push_back(xfft::validate_hashin(n > 0 ? n : 16, solver));
    bool ok = true;
    for (const auto& r : reports) {
      std::cout << xfft::format_report(r) << "\n";
      ok &= r.passed;
    }
    return ok ? xfft::kExitOk : xfft::kExitValidationFailed;
  } catch (const xfft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return xfft::kExitConfigInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return xfft::kExitConfigInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return xfft::kExitNotConverged;
  }
}
