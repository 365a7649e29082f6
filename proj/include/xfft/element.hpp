#pragma once

// Element-level kernels of the enriched P1 discretization: barycentric shape
// functions, the modified-abs enrichment, subdivision of cut tetrahedra,
// symmetric simplex quadrature and the per-element matrices that the
// matrix-free residual reuses in every iteration.

#include "xfft/mesh.hpp"
#include "xfft/microstructure.hpp"
#include "xfft/voigt.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace xfft {

using TetVertices = std::array<Vec3, 4>;
using ShapeGradients = Eigen::Matrix<double, 3, 4>;
using StrainMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

double signed_volume(const TetVertices& v);

/// Constant gradients of the four barycentric functions (columns). Throws
/// std::invalid_argument for degenerate tets.
ShapeGradients p1_grads(const TetVertices& v);

Eigen::Vector4d barycentric(const TetVertices& v, const ShapeGradients& grads, const Vec3& x);

/// Value and gradient of sum N_i |L_i| - |sum N_i L_i| at a point with
/// barycentric coordinates `bary`. `side` (+1/-1) selects the branch of the
/// absolute value; 0 takes it from the sign of the interpolant.
struct EnrichmentValue {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
};
EnrichmentValue modified_abs(const std::array<double, 4>& nodal, const Eigen::Vector4d& bary,
                             const ShapeGradients& grads, int side = 0);

/// Piece of a tet on one side of the linearized interface. `volume` is the
/// quadrature volume, which may differ from the geometric one after sliver
/// removal.
struct SubTet {
  TetVertices v;
  int side = 1;
  double volume = 0.0;
};

inline constexpr double kSliverFraction = 1e-12;

/// Splits a tet along the zero set of the linear interpolant of `nodal`:
/// 1 piece when uncut, 4 for a lone-vertex sign pattern, 6 for a two-two
/// pattern. Slivers below 1e-12 of the tet volume are dropped and the
/// remaining volumes rescaled to the parent volume.
std::vector<SubTet> cut_tet(const TetVertices& v, const std::array<double, 4>& nodal,
                            int* dropped = nullptr);

struct QuadPoint {
  Vec3 x = Vec3::Zero();
  double w = 0.0;
};

/// Four-point symmetric rule, exact for quadratics. Weights are volume / 4.
std::array<QuadPoint, 4> shunn_ham_4(const TetVertices& v, double volume);
std::array<QuadPoint, 4> shunn_ham_4(const TetVertices& v);

/// Quadrature rule signature used by the assembly routines.
using TetRule = std::vector<QuadPoint> (*)(const TetVertices&, double volume);
std::vector<QuadPoint> shunn_ham_rule(const TetVertices& v, double volume);

/// Writes the three Mandel strain columns of the vector functions phi e_c,
/// c = 0..2, with grad phi = g, into B(:, col .. col+2).
void set_strain_columns(StrainMatrix& b, int col, const Vec3& g);

/// Integrated element quantities. For n element dofs:
///   stiffness = sum w B^T C B          (n x n)
///   load      = sum w B^T C            (n x 6), maps the average strain
///   integrated_stiffness = sum w C
///   norm_diag = sum w |B col|^2        (n), unit-coefficient column norms
/// The average-stress matrix S_e equals load^T.
struct ElementMatrices {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd load;
  Mat6 integrated_stiffness = Mat6::Zero();
  Eigen::VectorXd norm_diag;
  double volume = 0.0;
  int quad_points = 0;
};

ElementMatrices assemble_plain(const TetVertices& v, const Stiffness66& c);

/// Unenriched tet with a stiffness given per quadrature point.
ElementMatrices assemble_p1_quadrature(const TetVertices& v, std::span<const QuadPoint> points,
                                       std::span<const Stiffness66> stiffness);

/// Enriched tet cut by one interface with nodal values `nodal`. `c_pos` and
/// `c_neg` are the stiffnesses on the positive and negative side. Columns 12..23
/// belong to the unscaled enriched functions N_j rho.
ElementMatrices assemble_enriched(const TetVertices& v, const std::array<double, 4>& nodal,
                                  const Stiffness66& c_pos, const Stiffness66& c_neg,
                                  TetRule rule = &shunn_ham_rule, int* dropped = nullptr);

/// Rescales the enriched columns/rows by `factors` (12 entries).
void apply_enrichment_scaling(ElementMatrices& m, std::span<const double> factors);

/// Per-tet storage kind inside the element caches.
enum class TetKind : std::uint8_t { Reference, Enriched, Individual };

struct TetRecord {
  TetKind kind = TetKind::Reference;
  std::uint8_t phase = 0;
  std::int32_t index = -1;  // into enriched or individual storage
};

using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x6 = Eigen::Matrix<double, 12, 6>;
using Mat24 = Eigen::Matrix<double, 24, 24>;
using Mat24x6 = Eigen::Matrix<double, 24, 6>;

/// Matrices of uncut tets and of whole homogeneous voxels for one phase. All
/// voxels are congruent, so these are shared by every uncut element.
struct ReferenceBlocks {
  std::array<Mat12, 6> tet_stiffness;
  std::array<Mat12x6, 6> tet_load;
  Mat24 voxel_stiffness;
  Mat24x6 voxel_load;
};

struct CacheOptions {
  bool enrich = true;
};

struct CacheStats {
  std::int64_t simple_voxels = 0;
  std::int64_t enriched_tets = 0;
  std::int64_t individual_tets = 0;
  std::int64_t multi_cut_tets = 0;
  std::int64_t dropped_subtets = 0;
  std::int64_t dropped_enriched_dofs = 0;
  int max_quad_points_per_voxel = 0;
};

/// All per-element data needed by the residual, the preconditioner-free part
/// of the solver and the post-processing.
struct ElementCaches {
  Grid grid;
  ElementTopology topo;
  std::vector<ReferenceBlocks> reference;   // per phase
  std::vector<std::uint8_t> voxel_phase;    // valid for simple voxels
  std::vector<std::int32_t> voxel_detail;   // -1: simple voxel, else 6 records
  std::vector<TetRecord> details;

  // Enriched (cut) tets: 24x24 stiffness and 24x6 load, column-major.
  std::vector<double> enriched_stiffness;
  std::vector<double> enriched_load;
  std::vector<std::array<std::int32_t, 4>> enriched_ids;
  std::vector<std::int8_t> enriched_interface;

  // Individually assembled unenriched tets (multi-cut fallback, or cut tets
  // when enrichment is disabled): 12x12 and 12x6.
  std::vector<double> individual_stiffness;
  std::vector<double> individual_load;

  /// D0 per enriched dof (3 per enriched node), before taking the inverse root.
  std::vector<double> enrichment_norms;
  /// D0^{-1/2}, zero for dropped dofs.
  std::vector<double> enrichment_scaling;

  Mat6 integrated_stiffness = Mat6::Zero();  // integral of C over the cell
  CacheStats stats;
};

ElementCaches build_element_caches(const PhaseAssembly& assembly, const Grid& grid,
                                   const ElementTopology& topo, const DofLayout& layout,
                                   const NodalLevelSet& nodal, const CacheOptions& options = {});

/// Nodal values of the cutting interface for tet t of voxel v.
std::array<double, 4> tet_levelset(const NodalLevelSet& nodal, int iface,
                                   const std::array<std::int64_t, 4>& nodes);

/// Phase of the region on `side` of interface `iface` inside a tet where all
/// other interfaces keep the sign they have at `probe_node`.
int side_phase(const PhaseAssembly& assembly, const NodalLevelSet& nodal, int iface, int side,
               std::int64_t probe_node);

}  // namespace xfft
