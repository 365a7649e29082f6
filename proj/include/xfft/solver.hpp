#pragma once

// Matrix-free residual of the scaled enriched system and the iterative
// schemes that solve it with the block preconditioner diag(A0, I).

#include "xfft/element.hpp"
#include "xfft/greenop.hpp"
#include "xfft/mesh.hpp"
#include "xfft/microstructure.hpp"
#include "xfft/voigt.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xfft {

/// Flat dof vector: FE block (3 per node) followed by the enriched block
/// (3 per enriched node).
class DofVector {
 public:
  DofVector() = default;
  DofVector(std::int64_t n_fe, std::int64_t n_x) : data_(3 * (n_fe + n_x), 0.0), n_fe_(n_fe) {}

  std::span<double> all() { return data_; }
  std::span<const double> all() const { return data_; }
  std::span<double> fe() { return std::span(data_).first(3 * n_fe_); }
  std::span<const double> fe() const { return std::span(data_).first(3 * n_fe_); }
  std::span<double> enriched() { return std::span(data_).subspan(3 * n_fe_); }
  std::span<const double> enriched() const { return std::span(data_).subspan(3 * n_fe_); }

  std::int64_t size() const { return std::int64_t(data_.size()); }
  std::int64_t n_fe() const { return n_fe_; }
  double& operator[](std::int64_t i) { return data_[i]; }
  double operator[](std::int64_t i) const { return data_[i]; }
  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

 private:
  std::vector<double> data_;
  std::int64_t n_fe_ = 0;
};

/// Deterministic inner product: fixed-size chunks summed serially, chunk
/// results combined pairwise. Independent of the thread count.
double dot(std::span<const double> a, std::span<const double> b);
inline double dot(const DofVector& a, const DofVector& b) { return dot(a.all(), b.all()); }
/// y += alpha x
void axpy(double alpha, const DofVector& x, DofVector& y);
/// y = alpha y + x
void xpay(const DofVector& x, double alpha, DofVector& y);

struct DiscretizationOptions {
  bool enrich = true;
};

/// Discrete cell problem: geometry, dof layout, element caches and the
/// preconditioner for one grid.
class System {
 public:
  System(PhaseAssembly assembly, Grid grid, DiscretizationOptions options = {});

  const PhaseAssembly& assembly() const { return assembly_; }
  const Grid& grid() const { return grid_; }
  const ElementTopology& topology() const { return topo_; }
  const NodalLevelSet& nodal() const { return nodal_; }
  const DofLayout& layout() const { return layout_; }
  const ElementCaches& caches() const { return caches_; }
  const GreenOperator& green() const { return *green_; }
  const DiscretizationOptions& options() const { return options_; }
  StiffnessBounds bounds() const { return bounds_; }

  DofVector zeros() const { return DofVector(layout_.n_fe, layout_.n_x()); }

  /// y = A x + b(strain) with b_e = load_e * strain; optionally the stress
  /// integral sum_e S_e x_e of the fluctuation part.
  void apply(const DofVector& x, const Strain6& strain, DofVector& y,
             Vec6* stress_integral = nullptr) const;

  /// Residual r(u) = sum_e Lambda_e^T (A_e u_e + load_e strain): the gradient of
  /// the cell energy 1/2 int (strain + grad^s u) : C : (strain + grad^s u).
  DofVector residual(const DofVector& u, const Strain6& strain) const;

  /// (1/|Y|) (sum_e S_e u_e + int C strain).
  Stress6 average_stress(const DofVector& u, const Strain6& strain) const;
  Stress6 average_stress_from_integral(const Vec6& fluctuation_integral, const Strain6& strain) const;

  /// z = P^{-1} f: Green operator on the FE block, identity on the enriched block.
  void precondition(const DofVector& f, DofVector& z) const;
  /// sqrt(f^T P^{-1} f).
  double res_norm(const DofVector& f) const;

  /// 1/2 u^T A u + u^T b(strain) + 1/2 strain : (int C) : strain.
  double energy(const DofVector& u, const Strain6& strain) const;

 private:
  PhaseAssembly assembly_;
  Grid grid_;
  DiscretizationOptions options_;
  ElementTopology topo_;
  NodalLevelSet nodal_;
  DofLayout layout_;
  ElementCaches caches_;
  std::unique_ptr<GreenOperator> green_;
  StiffnessBounds bounds_;
};

enum class Scheme { Basic, BarzilaiBorwein, LinearCG, NonlinearCG };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

enum class LineSearch { Fixed, Exact };

struct SolverConfig {
  Scheme scheme = Scheme::LinearCG;
  double tol = 1e-7;
  int maxit = 1000;
  /// Print progress every `report_interval` iterations to stderr (0: silent).
  int report_interval = 0;
  /// Nonlinear CG only.
  LineSearch line_search = LineSearch::Fixed;
  int restart_interval = 0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double res = 0.0;
  double res_rel = 0.0;
  double wall_time = 0.0;
};

struct SolveResult {
  DofVector u;
  int iterations = 0;
  bool converged = false;
  Stress6 average_stress = Stress6::Zero();
  double res = 0.0;
  /// Residual recomputed from scratch at the returned iterate.
  double verified_res = 0.0;
  /// Right-hand side of the stopping test, tol * |<sigma>| * |Y|.
  double threshold = 0.0;
  std::vector<IterationRecord> history;
};

class SolverBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Step size s0 = (C_- + C_+) / 2 of the basic scheme.
double basic_step(const System& system);

SolveResult run_lcg(const System& system, const Strain6& strain, const SolverConfig& config);
SolveResult run_basic(const System& system, const Strain6& strain, const SolverConfig& config);
SolveResult run_bb(const System& system, const Strain6& strain, const SolverConfig& config);
SolveResult run_ncg(const System& system, const Strain6& strain, const SolverConfig& config);
SolveResult solve(const System& system, const Strain6& strain, const SolverConfig& config);

}  // namespace xfft
