#pragma once

// Periodic voxel grid, the six-tetrahedra voxel split and the degree-of-freedom
// layout of the enriched discretization.
//
// Conventions:
//  * node (i, j, k) sits at (i h1, j h2, k h3); node index i + N1 (j + N2 k),
//    so x runs fastest. Voxel (i, j, k) has node (i, j, k) as its lower corner
//    and shares its index.
//  * nodal vector fields are stored node-major, component-minor.
//  * voxel corners are numbered c = dx + 2 dy + 4 dz.

#include "xfft/voigt.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace xfft {

struct NodalLevelSet;

struct Grid {
  std::array<int, 3> n{2, 2, 2};
  std::array<double, 3> length{1.0, 1.0, 1.0};

  Grid() = default;
  Grid(std::array<int, 3> counts, std::array<double, 3> lengths);
  static Grid cube(int count, double edge) { return Grid({count, count, count}, {edge, edge, edge}); }

  double spacing(int axis) const { return length[axis] / n[axis]; }
  Vec3 spacing_vec() const { return {spacing(0), spacing(1), spacing(2)}; }
  double min_spacing() const;
  std::int64_t node_count() const { return std::int64_t(n[0]) * n[1] * n[2]; }
  std::int64_t voxel_count() const { return node_count(); }
  double cell_volume() const { return length[0] * length[1] * length[2]; }
  double voxel_volume() const { return spacing(0) * spacing(1) * spacing(2); }

  /// Periodically wrapped node index.
  std::int64_t node_index(std::int64_t i, std::int64_t j, std::int64_t k) const;
  std::array<int, 3> node_coords(std::int64_t index) const;
  Vec3 node_position(std::int64_t index) const;
  /// Maps x into [0, length) per axis.
  Vec3 wrap(const Vec3& x) const;
};

/// Fixed split of the unit voxel into six positively oriented tetrahedra that
/// all share the main diagonal from corner 0 to corner 7. Tet t follows the
/// monotone path 0 -> e_a -> e_a + e_b -> 7 for the axis permutation perm[t]
/// and contains exactly the points with s_a >= s_b >= s_c in local voxel
/// coordinates s in [0,1]^3.
struct ElementTopology {
  static constexpr int kTetsPerVoxel = 6;
  std::array<std::array<int, 4>, kTetsPerVoxel> corners{};
  std::array<std::array<int, 3>, kTetsPerVoxel> perm{};

  static Vec3 corner_offset(int corner) {
    return {double(corner & 1), double((corner >> 1) & 1), double((corner >> 2) & 1)};
  }
  /// Vertex positions of tet t in the voxel with lower corner `origin`.
  std::array<Vec3, 4> tet_vertices(int t, const Vec3& origin, const Vec3& h) const;
  /// Index of the tet containing local voxel coordinates s.
  int locate(const Vec3& s) const;
};

ElementTopology build_topology();

/// Global node indices of the four vertices of tet t of voxel v.
std::array<std::int64_t, 4> tet_nodes(const Grid& grid, const ElementTopology& topo,
                                      std::int64_t voxel, int t);
std::array<std::int64_t, 8> voxel_nodes(const Grid& grid, std::int64_t voxel);

/// Element class codes stored per tet.
inline constexpr std::int8_t kUncut = -1;
inline constexpr std::int8_t kMultiCut = -2;

struct DofLayout {
  std::int64_t n_fe = 0;
  /// Dense enriched index -> global node.
  std::vector<std::int64_t> enriched_nodes;
  /// Global node -> dense enriched index, -1 when the node is not enriched.
  std::vector<std::int32_t> enriched_index;
  /// Per tet (voxel * 6 + t): kUncut, kMultiCut or the index of the single
  /// interface cutting it.
  std::vector<std::int8_t> element_class;
  std::int64_t n_cut = 0;
  std::int64_t n_multi = 0;

  std::int64_t n_x() const { return std::int64_t(enriched_nodes.size()); }
  std::int64_t total_dofs() const { return 3 * (n_fe + n_x()); }
  /// Offset of the enriched block in a flat dof vector.
  std::int64_t enriched_offset() const { return 3 * n_fe; }

  /// Dof slots of a tet: 12 FE slots, followed by 12 enriched slots when the
  /// tet is cut. Returns the number of valid slots.
  int gather_map(const Grid& grid, const ElementTopology& topo, std::int64_t voxel, int t,
                 std::array<std::int64_t, 24>& slots) const;
};

/// A tet is cut iff the nodal values of exactly one interface change sign on
/// it; J is the union of the nodes of cut tets. Tets where several
/// interfaces change sign are marked kMultiCut and do not drive J.
/// With `enrich == false` no node is enriched but tets are still classified.
DofLayout detect_enrichment(const NodalLevelSet& nodal, const ElementTopology& topo,
                            const Grid& grid, bool enrich = true);

}  // namespace xfft
