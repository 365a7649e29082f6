#include "xfft/cli.hpp"

#include "xfft/field_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace xfft {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_vector(const Vec6& v) { return {v(0), v(1), v(2), v(3), v(4), v(5)}; }

double sweep_metric(const RunConfig& cfg, const SolveResult& r) {
  switch (cfg.outputs.metric) {
    case SweepMetric::Bulk: {
      const double tr = cfg.loading(0) + cfg.loading(1) + cfg.loading(2);
      if (tr == 0.0) throw std::invalid_argument("metric 'bulk' needs a loading with nonzero trace");
      return bulk_from_hydrostatic(r.average_stress, tr);
    }
    case SweepMetric::Energy: return cfg.loading.dot(r.average_stress);
    case SweepMetric::StressComponent: return r.average_stress(cfg.outputs.stress_component);
  }
  return 0.0;
}

void write_stats(nlohmann::ordered_json& j, const System& system) {
  const auto& st = system.caches().stats;
  j["enriched_nodes"] = system.layout().n_x();
  j["cut_tets"] = system.layout().n_cut;
  j["multi_cut_tets"] = st.multi_cut_tets;
  j["dropped_subtets"] = st.dropped_subtets;
  j["dropped_enriched_dofs"] = st.dropped_enriched_dofs;
  j["snapped_nodes"] = system.nodal().snapped;
  j["max_quad_points_per_voxel"] = st.max_quad_points_per_voxel;
}

void warn_fallbacks(const System& system, std::ostream& err) {
  const auto& st = system.caches().stats;
  if (st.multi_cut_tets > 0)
    err << "warning: " << st.multi_cut_tets
        << " tets are crossed by more than one interface; assembled without enrichment\n";
  if (st.dropped_enriched_dofs > 0)
    err << "warning: " << st.dropped_enriched_dofs << " enriched dofs have zero norm and were dropped\n";
}

}  // namespace

void apply_overrides(SolverConfig& config, const Overrides& overrides) {
  if (overrides.tol) config.tol = *overrides.tol;
  if (overrides.scheme) config.scheme = *overrides.scheme;
  config.validate();
}

void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "iteration,res,res_rel,wall_time\n";
  for (const auto& h : history)
    out << h.iteration << "," << num(h.res) << "," << num(h.res_rel) << "," << num(h.wall_time) << "\n";
}

int run_solve(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& os) {
  std::filesystem::create_directories(out);
  const auto start = Clock::now();
  const System system(cfg.assembly, cfg.grid, cfg.discretization);
  const double setup = seconds_since(start);
  warn_fallbacks(system, std::cerr);
  const auto solve_start = Clock::now();
  const SolveResult r = solve(system, cfg.loading, cfg.solver);
  const double solve_time = seconds_since(solve_start);

  if (cfg.outputs.log) write_history_csv(out / "convergence.csv", r.history);

  nlohmann::ordered_json j;
  j["scheme"] = scheme_name(cfg.solver.scheme);
  j["discretization"] = cfg.discretization.enrich ? "xfem" : "p1";
  j["grid"] = {{"n", cfg.grid.n}, {"lengths", cfg.grid.length}};
  j["loading"] = to_vector(cfg.loading);
  j["average_stress"] = to_vector(r.average_stress);
  const double tr = cfg.loading(0) + cfg.loading(1) + cfg.loading(2);
  if (tr != 0.0) j["bulk_modulus"] = bulk_from_hydrostatic(r.average_stress, tr);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["res"] = r.res;
  j["verified_res"] = r.verified_res;
  j["threshold"] = r.threshold;
  j["setup_time"] = setup;
  j["solve_time"] = solve_time;
  write_stats(j, system);
  std::ofstream(out / "summary.json") << j.dump(2) << "\n";
  os << j.dump(2) << "\n";

  if (cfg.outputs.fields || cfg.outputs.vtk) {
    const auto& g = cfg.grid;
    const auto fe = r.u.fe();
    const VoxelFields vf = voxel_averages(system, r.u, cfg.loading);
    if (cfg.outputs.fields) {
      write_field(out / "displacement", {"displacement", g.n, 3, "node", "um"}, fe);
      write_field(out / "strain", {"strain", g.n, 6, "voxel", "1"}, vf.strain);
      write_field(out / "stress", {"stress", g.n, 6, "voxel", "MPa"}, vf.stress);
    }
    if (cfg.outputs.vtk) {
      const std::array<VtkCellField, 2> cells{VtkCellField{"strain", 6, vf.strain},
                                              VtkCellField{"stress", 6, vf.stress}};
      write_vtk(out / "fields.vtk", g.n, {g.spacing(0), g.spacing(1), g.spacing(2)}, fe, cells);
    }
  }

  if (!r.converged) {
    std::cerr << "solver did not converge within " << cfg.solver.maxit << " iterations\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int run_sweep(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& os) {
  std::filesystem::create_directories(out);
  const auto& ns = cfg.outputs.study_ns;
  if (ns.empty()) throw std::invalid_argument("sweep needs outputs.study_ns");
  const bool have_reference = cfg.outputs.reference.has_value();

  StudyResult study;
  for (const int n : ns) {
    const std::array<int, 3> counts{n, n, n};
    const auto start = Clock::now();
    const System system(cfg.assembly, Grid(counts, cfg.grid.length), cfg.discretization);
    warn_fallbacks(system, std::cerr);
    const SolveResult r = solve(system, cfg.loading, cfg.solver);
    StudyRow row;
    row.n = n;
    row.h = cfg.grid.length[0] / n;
    row.value = sweep_metric(cfg, r);
    row.iterations = r.iterations;
    row.converged = r.converged;
    row.wall_time = seconds_since(start);
    row.enriched_nodes = system.layout().n_x();
    row.history = r.history;
    if (cfg.outputs.log) write_history_csv(out / ("convergence_n" + std::to_string(n) + ".csv"), r.history);
    os << "n=" << n << " value=" << num(row.value) << " iterations=" << row.iterations
       << (row.converged ? "" : " (not converged)") << "\n";
    study.rows.push_back(std::move(row));
  }

  // Without a reference value the finest resolution serves as one and is
  // left out of the fit.
  const double reference = have_reference ? *cfg.outputs.reference : study.rows.back().value;
  std::vector<double> h, e;
  const std::size_t fitted = have_reference ? study.rows.size() : study.rows.size() - 1;
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    auto& row = study.rows[i];
    row.error = rel_error(row.value, reference);
    if (i < fitted) {
      h.push_back(row.h);
      e.push_back(row.error);
    }
  }
  study.slope = fit_slope(h, e);

  std::ofstream csv(out / "study.csv");
  csv << "n,h,value,error,iterations,converged,wall_time,enriched_nodes\n";
  for (const auto& row : study.rows) {
    csv << row.n << "," << num(row.h) << "," << num(row.value) << "," << num(row.error) << "," << row.iterations
        << "," << (row.converged ? 1 : 0) << "," << num(row.wall_time) << "," << row.enriched_nodes << "\n";
  }
  if (study.slope.valid) {
    csv << "slope," << num(study.slope.slope) << "\n";
    os << "slope=" << num(study.slope.slope);
    if (!study.slope.note.empty()) os << " (" << study.slope.note << ")";
    os << "\n";
  } else {
    csv << "slope,nan\n";
    std::cerr << "warning: no slope fitted: " << study.slope.note << "\n";
  }

  bool converged = true;
  for (const auto& row : study.rows) converged &= row.converged;
  return converged ? kExitOk : kExitNotConverged;
}

int run_symbol_dump(const Grid& grid, const std::filesystem::path& out, std::ostream& os) {
  std::filesystem::create_directories(out);
  const GreenOperator green(grid, build_topology());
  const auto dims = green.half_dims();
  const auto packed = green.packed_symbol();
  write_field(out / "symbol", {"green_symbol", dims, 9, "frequency", "1/MPa"}, packed);
  os << "wrote " << (out / "symbol.bin").string() << " (" << dims[0] << "x" << dims[1] << "x" << dims[2]
     << " half-spectrum frequencies, 9 doubles each: G00 G11 G22 re/im G01 re/im G02 re/im G12)\n";
  return kExitOk;
}

// ------------------------------------------------------------ validation

ValidationReport validate_homogeneous(int n, const SolverConfig& config) {
  ValidationReport rep;
  rep.name = "homogeneous";
  PhaseAssembly a;
  a.phases = {{"solid", {1.5, 0.25}}};
  const System system(a, Grid::cube(n, 1.0));
  Strain6 load;
  load << 0.3, -0.1, 0.2, 0.05, -0.07, 0.11;
  const SolveResult r = solve(system, load, config);
  const Stiffness66 c = iso_stiffness(a.phases[0].material);
  const double stress_err = (r.average_stress - c * load).norm() / (c * load).norm();
  const EffectiveStiffness eff = effective_stiffness(system, config);
  const double stiff_err = (eff.stiffness - c).norm() / c.norm();
  rep.metrics = {{"stress_error", stress_err}, {"stiffness_error", stiff_err}, {"iterations", r.iterations}};
  rep.passed = r.converged && r.iterations == 0 && stress_err < 1e-12 && stiff_err < 1e-12;
  return rep;
}

ValidationReport validate_laminate(int n, const SolverConfig& config, bool mid_voxel) {
  ValidationReport rep;
  rep.name = mid_voxel ? "laminate (mid-voxel interfaces)" : "laminate (node-plane interfaces)";
  if (n % 4 != 0) throw std::invalid_argument("laminate validation needs N divisible by 4");
  const double h = 1.0 / n;
  // Shifting by h/2 moves both interfaces to voxel midplanes while keeping
  // them N/2 layers apart, so no node sees both.
  const double centre = mid_voxel ? 0.5 + 0.5 * h : 0.5;
  const double width = 0.5;
  PhaseAssembly a;
  a.phases = {{"soft", {1.5, 0.25}}, {"stiff", {15.0, 0.3}}};
  a.regions = {{Slab{Vec3(centre, 0.5, 0.5), Vec3::UnitX(), width}, 1}};
  const System system(a, Grid::cube(n, 1.0));
  const EffectiveStiffness eff = effective_stiffness(system, config);
  const auto stiff = a.stiffnesses();
  const std::array<Stiffness66, 2> layers{stiff[1], stiff[0]};
  const std::array<double, 2> fractions{width, 1.0 - width};
  const Stiffness66 ref = laminate_reference(layers, fractions, 0);
  const double err = (eff.stiffness - ref).norm() / ref.norm();
  rep.metrics = {{"stiffness_error", err}, {"asymmetry", eff.asymmetry}, {"enriched_nodes", double(system.layout().n_x())}};
  rep.passed = eff.converged && err < 1e-8;
  return rep;
}

ValidationReport validate_hashin(int n, const SolverConfig& config) {
  ValidationReport rep;
  rep.name = "hashin";
  const HashinSetup setup = HashinSetup::standard();
  const System system(hashin_assembly(setup), Grid::cube(n, setup.edge));
  Strain6 load;
  load << 1, 1, 1, 0, 0, 0;
  const SolveResult r = solve(system, load, config);
  const double k = bulk_from_hydrostatic(r.average_stress, 3.0);
  const double err = rel_error(k, setup.k_matrix);
  rep.metrics = {{"bulk_modulus", k}, {"rel_error", err}, {"iterations", r.iterations}};
  rep.passed = r.converged && err < 1e-3 && r.iterations >= 24 && r.iterations <= 36;
  return rep;
}

std::string format_report(const ValidationReport& report) {
  std::string s = (report.passed ? "PASS " : "FAIL ") + report.name + ":";
  for (const auto& [key, value] : report.metrics) s += " " + key + "=" + num(value);
  if (!report.detail.empty()) s += " (" + report.detail + ")";
  return s;
}

}  // namespace xfft
