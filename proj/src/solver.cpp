#include "xfft/solver.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

namespace xfft {

namespace {

constexpr std::int64_t kDotChunk = 4096;

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 2) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  const std::int64_t n = std::int64_t(a.size());
  const std::int64_t chunks = (n + kDotChunk - 1) / kDotChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t end = std::min(n, (c + 1) * kDotChunk);
    double s = 0.0;
    for (std::int64_t i = c * kDotChunk; i < end; ++i) s += a[i] * b[i];
    partial[c] = s;
  }
  return pairwise_sum(partial);
}

void axpy(double alpha, const DofVector& x, DofVector& y) {
  const std::int64_t n = y.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpay(const DofVector& x, double alpha, DofVector& y) {
  const std::int64_t n = y.size();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] + alpha * y[i];
}

System::System(PhaseAssembly assembly, Grid grid, DiscretizationOptions options)
    : assembly_(std::move(assembly)), grid_(grid), options_(options), topo_(build_topology()) {
  assembly_.validate();
  nodal_ = sample_nodal(assembly_, grid_);
  layout_ = detect_enrichment(nodal_, topo_, grid_, options_.enrich);
  caches_ = build_element_caches(assembly_, grid_, topo_, layout_, nodal_, {options_.enrich});
  green_ = std::make_unique<GreenOperator>(grid_, topo_);
  const auto stiff = assembly_.stiffnesses();
  bounds_ = stiffness_bounds(stiff);
}

void System::apply(const DofVector& x, const Strain6& strain, DofVector& y, Vec6* stress_integral) const {
  y.set_zero();
  const auto& g = grid_;
  const auto& c = caches_;
  const std::int64_t xoff = layout_.enriched_offset();
  const bool with_strain = strain.squaredNorm() > 0.0;
  const int slabs = g.n[2];
  std::vector<Vec6> slab_stress(slabs, Vec6::Zero());

  auto process_slab = [&](int k) {
    Vec6 sigma = Vec6::Zero();
    Eigen::Matrix<double, 24, 1> xe, ye;
    for (int j = 0; j < g.n[1]; ++j) {
      for (int i = 0; i < g.n[0]; ++i) {
        const std::int64_t voxel = g.node_index(i, j, k);
        const auto nodes = voxel_nodes(g, voxel);
        const std::int32_t detail = c.voxel_detail[voxel];
        if (detail < 0) {
          const auto& ref = c.reference[c.voxel_phase[voxel]];
          for (int corner = 0; corner < 8; ++corner)
            for (int d = 0; d < 3; ++d) xe(3 * corner + d) = x[3 * nodes[corner] + d];
          ye.noalias() = ref.voxel_stiffness * xe;
          if (with_strain) ye.noalias() += ref.voxel_load * strain;
          sigma.noalias() += ref.voxel_load.transpose() * xe;
          for (int corner = 0; corner < 8; ++corner)
            for (int d = 0; d < 3; ++d) y[3 * nodes[corner] + d] += ye(3 * corner + d);
          continue;
        }
        for (int t = 0; t < 6; ++t) {
          const TetRecord& rec = c.details[detail + t];
          std::array<std::int64_t, 24> slots;
          for (int a = 0; a < 4; ++a)
            for (int d = 0; d < 3; ++d) slots[3 * a + d] = 3 * nodes[c.topo.corners[t][a]] + d;
          if (rec.kind == TetKind::Enriched) {
            const auto& ids = c.enriched_ids[rec.index];
            for (int a = 0; a < 4; ++a)
              for (int d = 0; d < 3; ++d) slots[12 + 3 * a + d] = xoff + 3 * std::int64_t(ids[a]) + d;
            for (int s = 0; s < 24; ++s) xe(s) = x[slots[s]];
            const Eigen::Map<const Mat24> a(&c.enriched_stiffness[576 * std::size_t(rec.index)]);
            const Eigen::Map<const Mat24x6> l(&c.enriched_load[144 * std::size_t(rec.index)]);
            ye.noalias() = a * xe;
            if (with_strain) ye.noalias() += l * strain;
            sigma.noalias() += l.transpose() * xe;
            for (int s = 0; s < 24; ++s) y[slots[s]] += ye(s);
            continue;
          }
          Eigen::Matrix<double, 12, 1> x12, y12;
          for (int s = 0; s < 12; ++s) x12(s) = x[slots[s]];
          if (rec.kind == TetKind::Reference) {
            const auto& ref = c.reference[rec.phase];
            y12.noalias() = ref.tet_stiffness[t] * x12;
            if (with_strain) y12.noalias() += ref.tet_load[t] * strain;
            sigma.noalias() += ref.tet_load[t].transpose() * x12;
          } else {
            const Eigen::Map<const Mat12> a(&c.individual_stiffness[144 * std::size_t(rec.index)]);
            const Eigen::Map<const Mat12x6> l(&c.individual_load[72 * std::size_t(rec.index)]);
            y12.noalias() = a * x12;
            if (with_strain) y12.noalias() += l * strain;
            sigma.noalias() += l.transpose() * x12;
          }
          for (int s = 0; s < 12; ++s) y[slots[s]] += y12(s);
        }
      }
    }
    slab_stress[k] = sigma;
  };

  // Slabs k and k+2 touch disjoint node layers; with an odd slab count the
  // last slab wraps onto layer 0 and runs on its own.
  const int paired = slabs % 2 == 0 ? slabs : slabs - 1;
  for (int color = 0; color < 2; ++color) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = color; k < paired; k += 2) process_slab(k);
  }
  if (paired < slabs) process_slab(slabs - 1);

  if (stress_integral) {
    Vec6 total = Vec6::Zero();
    for (const auto& s : slab_stress) total += s;
    *stress_integral = total;
  }
}

DofVector System::residual(const DofVector& u, const Strain6& strain) const {
  DofVector r = zeros();
  apply(u, strain, r);
  return r;
}

Stress6 System::average_stress_from_integral(const Vec6& fluctuation_integral,
                                             const Strain6& strain) const {
  return (fluctuation_integral + caches_.integrated_stiffness * strain) / grid_.cell_volume();
}

Stress6 System::average_stress(const DofVector& u, const Strain6& strain) const {
  DofVector scratch = zeros();
  Vec6 integral;
  apply(u, Strain6::Zero(), scratch, &integral);
  return average_stress_from_integral(integral, strain);
}

void System::precondition(const DofVector& f, DofVector& z) const {
  green_->apply(f.fe(), z.fe());
  const auto fx = f.enriched();
  const auto zx = z.enriched();
  std::copy(fx.begin(), fx.end(), zx.begin());
}

double System::res_norm(const DofVector& f) const {
  DofVector z = zeros();
  precondition(f, z);
  const double q = dot(f, z);
  const double ff = dot(f, f);
  if (q < -1e-14 * ff) throw SolverBreakdown("preconditioner is not positive semidefinite");
  return std::sqrt(std::max(q, 0.0));
}

double System::energy(const DofVector& u, const Strain6& strain) const {
  DofVector au = zeros();
  DofVector b = zeros();
  apply(u, Strain6::Zero(), au);
  apply(zeros(), strain, b);
  return 0.5 * dot(u, au) + dot(u, b) + 0.5 * strain.dot(caches_.integrated_stiffness * strain);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "basic") return Scheme::Basic;
  if (name == "bb") return Scheme::BarzilaiBorwein;
  if (name == "lcg") return Scheme::LinearCG;
  if (name == "ncg") return Scheme::NonlinearCG;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected basic, bb, lcg or ncg)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Basic: return "basic";
    case Scheme::BarzilaiBorwein: return "bb";
    case Scheme::LinearCG: return "lcg";
    case Scheme::NonlinearCG: return "ncg";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (maxit < 1) throw std::invalid_argument("maxit must be at least 1");
}

double basic_step(const System& system) {
  const auto b = system.bounds();
  return 0.5 * (b.lower + b.upper);
}

namespace {

using Clock = std::chrono::steady_clock;

// Shared bookkeeping of the stopping test res <= tol |int_Y sigma|, with res
// and the stress integral both in unnormalized (integrated) form.
class Monitor {
 public:
  Monitor(const System& system, const Strain6& strain, const SolverConfig& config)
      : system_(system), strain_(strain), config_(config), start_(Clock::now()),
        volume_(system.grid().cell_volume()) {
    config.validate();
  }

  bool converged(int iteration, double res, const Vec6& fluct_integral, SolveResult& out) {
    out.average_stress = system_.average_stress_from_integral(fluct_integral, strain_);
    const double stress = out.average_stress.norm();
    const double reference = stress < 1e-300 ? 1.0 : stress;
    out.threshold = config_.tol * reference * volume_;
    out.res = res;
    const double wall = std::chrono::duration<double>(Clock::now() - start_).count();
    out.history.push_back({iteration, res, res / (reference * volume_), wall});
    if (config_.report_interval > 0 && iteration % config_.report_interval == 0) {
      std::cerr << scheme_name(config_.scheme) << " it " << iteration << " res_rel "
                << res / (reference * volume_) << "\n";
    }
    out.iterations = iteration;
    return res <= out.threshold;
  }

  void finish(SolveResult& out) {
    const DofVector r = system_.residual(out.u, strain_);
    out.verified_res = system_.res_norm(r);
  }

 private:
  const System& system_;
  const Strain6& strain_;
  const SolverConfig& config_;
  Clock::time_point start_;
  double volume_;
};

double preconditioned_square(const System& system, const DofVector& f, DofVector& z) {
  system.precondition(f, z);
  const double q = dot(f, z);
  if (q < -1e-14 * dot(f, f)) throw SolverBreakdown("preconditioner is not positive semidefinite");
  return std::max(q, 0.0);
}

}  // namespace

SolveResult run_lcg(const System& system, const Strain6& strain, const SolverConfig& config) {
  Monitor monitor(system, strain, config);
  SolveResult out;
  out.u = system.zeros();
  DofVector f = system.zeros();
  DofVector z = system.zeros();
  DofVector d = system.zeros();
  DofVector q = system.zeros();
  Vec6 sigma = Vec6::Zero();
  Vec6 sigma_d;

  system.apply(out.u, strain, f);
  double res2 = preconditioned_square(system, f, z);
  out.converged = monitor.converged(0, std::sqrt(res2), sigma, out);
  xpay(z, 0.0, d);  // d = z
  for (int k = 1; !out.converged && k <= config.maxit; ++k) {
    system.apply(d, Strain6::Zero(), q, &sigma_d);
    const double dq = dot(d, q);
    if (!(dq > 0.0)) throw SolverBreakdown("linear CG: loss of positive definiteness");
    // Descent along -d: the update uses the negative residual direction.
    const double alpha = res2 / dq;
    axpy(-alpha, d, out.u);
    axpy(-alpha, q, f);
    sigma -= alpha * sigma_d;
    const double res2_new = preconditioned_square(system, f, z);
    out.converged = monitor.converged(k, std::sqrt(res2_new), sigma, out);
    if (out.converged) break;
    xpay(z, res2_new / res2, d);
    res2 = res2_new;
  }
  monitor.finish(out);
  return out;
}

SolveResult run_basic(const System& system, const Strain6& strain, const SolverConfig& config) {
  Monitor monitor(system, strain, config);
  SolveResult out;
  out.u = system.zeros();
  DofVector r = system.zeros();
  DofVector z = system.zeros();
  const double step = 1.0 / basic_step(system);
  Vec6 sigma;
  for (int k = 0;; ++k) {
    system.apply(out.u, strain, r, &sigma);
    const double res2 = preconditioned_square(system, r, z);
    out.converged = monitor.converged(k, std::sqrt(res2), sigma, out);
    if (out.converged || k == config.maxit) break;
    axpy(-step, z, out.u);
  }
  monitor.finish(out);
  return out;
}

SolveResult run_bb(const System& system, const Strain6& strain, const SolverConfig& config) {
  Monitor monitor(system, strain, config);
  SolveResult out;
  out.u = system.zeros();
  DofVector r = system.zeros();
  DofVector z = system.zeros();
  DofVector r_old = system.zeros();
  DofVector z_old = system.zeros();
  const double fallback = 1.0 / basic_step(system);
  double step = fallback;
  double res2_old = 0.0;
  Vec6 sigma;
  for (int k = 0;; ++k) {
    system.apply(out.u, strain, r, &sigma);
    const double res2 = preconditioned_square(system, r, z);
    out.converged = monitor.converged(k, std::sqrt(res2), sigma, out);
    if (out.converged || k == config.maxit) break;
    if (k > 0) {
      // BB1 in the preconditioner metric: s = -step z_old, y = r - r_old,
      // new step = s^T P s / s^T y = step * res2_old / (z_old^T (r_old - r)).
      const double sy = dot(z_old, r_old) - dot(z_old, r);
      const double candidate = step * res2_old / sy;
      step = (std::isfinite(candidate) && candidate > 0.0) ? candidate : fallback;
    }
    axpy(-step, z, out.u);
    std::swap(r, r_old);
    std::swap(z, z_old);
    res2_old = res2;
  }
  monitor.finish(out);
  return out;
}

SolveResult run_ncg(const System& system, const Strain6& strain, const SolverConfig& config) {
  Monitor monitor(system, strain, config);
  SolveResult out;
  out.u = system.zeros();
  DofVector r = system.zeros();
  DofVector z = system.zeros();
  DofVector d = system.zeros();
  DofVector q = system.zeros();
  const double fixed_step = 1.0 / basic_step(system);
  double res2_old = 0.0;
  int since_restart = 0;
  Vec6 sigma;
  for (int k = 0;; ++k) {
    system.apply(out.u, strain, r, &sigma);
    const double res2 = preconditioned_square(system, r, z);
    out.converged = monitor.converged(k, std::sqrt(res2), sigma, out);
    if (out.converged || k == config.maxit) break;

    // Fletcher-Reeves direction; d holds the descent direction.
    const bool restart = k == 0 || (config.restart_interval > 0 && since_restart >= config.restart_interval);
    if (restart) {
      xpay(z, 0.0, d);
      since_restart = 0;
    } else {
      xpay(z, res2 / res2_old, d);
      if (!(dot(r, d) > 0.0)) {  // -d is not a descent direction
        xpay(z, 0.0, d);
        since_restart = 0;
      }
    }
    ++since_restart;

    double step = fixed_step;
    if (config.line_search == LineSearch::Exact) {
      system.apply(d, Strain6::Zero(), q);
      const double dq = dot(d, q);
      if (!(dq > 0.0)) throw SolverBreakdown("nonlinear CG: loss of positive definiteness");
      step = dot(r, d) / dq;
    }
    axpy(-step, d, out.u);
    res2_old = res2;
  }
  monitor.finish(out);
  return out;
}

SolveResult solve(const System& system, const Strain6& strain, const SolverConfig& config) {
  switch (config.scheme) {
    case Scheme::Basic: return run_basic(system, strain, config);
    case Scheme::BarzilaiBorwein: return run_bb(system, strain, config);
    case Scheme::LinearCG: return run_lcg(system, strain, config);
    case Scheme::NonlinearCG: return run_ncg(system, strain, config);
  }
  throw std::invalid_argument("unknown scheme");
}

}  // namespace xfft
