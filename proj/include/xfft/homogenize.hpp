#pragma once

// Load-case drivers, effective properties, closed-form references, local
// field sampling and convergence studies.

#include "xfft/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace xfft {

// ---------------------------------------------------------------- effective

struct EffectiveStiffness {
  Stiffness66 stiffness = Stiffness66::Zero();  // symmetrized
  Stiffness66 raw = Stiffness66::Zero();        // column k = <sigma> for unit strain e_k
  double asymmetry = 0.0;                       // |raw - raw^T| / |raw|
  bool converged = true;
  std::array<int, 6> iterations{};
};

EffectiveStiffness effective_stiffness(const System& system, const SolverConfig& config);

double rel_error(double value, double reference);

// -------------------------------------------------------------- references

/// Effective bulk modulus of the coated sphere assemblage with volume ratio
/// c = (r_i / r_c)^3.
double hashin_reference(double k_coating, double mu_coating, double k_inclusion, double r_inclusion,
                        double r_coating);

/// Parameters of the neutral coated sphere: the coating and inclusion moduli
/// are chosen so that the assemblage is invisible in a matrix of bulk modulus
/// k_matrix under hydrostatic load.
struct HashinSetup {
  double edge = 16.0;
  double poisson = 0.25;
  double k_matrix = 1.0;
  double contrast = 10.0;  // K_inclusion / K_coating
  double r_inclusion = 0.0;
  double r_coating = 0.0;

  double k_coating() const;
  double k_inclusion() const { return contrast * k_coating(); }
  MaterialIso material(double bulk) const;
  static HashinSetup standard();
};

/// Matrix (phase 0), coating (1), inclusion (2), centered in the cell.
PhaseAssembly hashin_assembly(const HashinSetup& setup);

/// Effective bulk modulus from a hydrostatic solve: sum_i sigma_ii / (3 tr eps).
double bulk_from_hydrostatic(const Stress6& stress, double trace_strain);

/// Closed-form effective stiffness of a periodic laminate with layers normal
/// to `axis`. Layer k has volume fraction fractions[k].
Stiffness66 laminate_reference(std::span<const Stiffness66> layers, std::span<const double> fractions,
                               int axis);

// ---------------------------------------------------------- local fields

/// A quadrature point of the discretization, tagged with its element and the
/// side of the cutting interface it lies on (0 for uncut elements).
struct FieldPoint {
  std::int64_t voxel = 0;
  int tet = 0;
  Vec3 x = Vec3::Zero();
  double w = 0.0;
  int side = 0;
};

/// Quadrature points used by the element assembly: 4 per uncut tet and 4 per
/// subtet of cut tets.
std::vector<FieldPoint> field_points(const System& system);

/// Total strain ebar + grad^s u inside tet `tet` of `voxel` at x.
Strain6 strain_in_tet(const System& system, const DofVector& u, const Strain6& strain,
                      std::int64_t voxel, int tet, const Vec3& x, int side = 0);
/// Same, locating the element containing x (periodic wrap applied).
Strain6 strain_at(const System& system, const DofVector& u, const Strain6& strain, const Vec3& x);

/// Phase of the discrete (linearized) geometry at a point of a tet.
int discrete_phase(const System& system, std::int64_t voxel, int tet, const Vec3& x, int side = 0);

/// sqrt(sum_a w_a |f(q_a)|^2).
double l2_norm_field(std::span<const FieldPoint> points, const std::function<double(const FieldPoint&)>& squared);

/// Voxel averages of strain and stress, 6 values per voxel.
struct VoxelFields {
  std::vector<double> strain;
  std::vector<double> stress;
};
VoxelFields voxel_averages(const System& system, const DofVector& u, const Strain6& strain);

/// Cell-averaged squared strain difference (1/|Y|) int |eps_test - eps_ref|^2
/// over the quadrature points of the test discretization.
double local_strain_error_sq(const System& test, const DofVector& u_test, const System& reference,
                             const DofVector& u_ref, const Strain6& strain);

struct EnergyBoundCheck {
  double energy_gap = 0.0;  // ebar : (C_test - C_ref) : ebar
  double lower = 0.0;       // C_- |d eps|^2
  double upper = 0.0;       // C_+ |d eps|^2
  double slack = 0.1;
  bool passed = false;
};

/// C_- |d eps|^2 (1 - slack) <= gap <= C_+ |d eps|^2 (1 + slack).
EnergyBoundCheck energy_bound_check(double energy_gap, double strain_err_sq, double c_minus, double c_plus,
                                    double slack = 0.1);

// ------------------------------------------------------------- studies

struct SlopeFit {
  bool valid = false;
  double slope = 0.0;
  std::size_t first = 0;  // index of the first point used
  std::string note;
};

/// Least-squares slope of log(y) against log(x). The first point is dropped
/// when its value is within 5x of the last one (pre-asymptotic guard); fewer
/// than 3 usable points give no slope.
SlopeFit fit_slope(std::span<const double> x, std::span<const double> y, bool guard = true);

struct StudyRow {
  int n = 0;
  double h = 0.0;
  double value = 0.0;
  double error = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::int64_t enriched_nodes = 0;
  std::vector<IterationRecord> history;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  SlopeFit slope;
};

/// Solves one load case per resolution and records metric(system, result).
/// `reference` turns the metric into an error via rel_error.
StudyResult convergence_study(const PhaseAssembly& assembly, const std::array<double, 3>& lengths,
                              std::span<const int> resolutions, const DiscretizationOptions& options,
                              const SolverConfig& config, const Strain6& strain,
                              const std::function<double(const System&, const SolveResult&)>& metric,
                              double reference);

}  // namespace xfft
