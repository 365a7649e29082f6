#pragma once

// Analytic level-set geometry on the periodic cell. Level sets are
// inside-positive: L(x) > 0 inside the primitive, L(x) < 0 outside, and |L|
// approximates the distance to the interface near it.

#include "xfft/mesh.hpp"
#include "xfft/voigt.hpp"

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace xfft {

/// Half-space {n . (x - p) > 0}; evaluated on the wrapped point, so it is only
/// periodic-consistent when the plane lies on the cell boundary.
struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

/// Max-composition of member spheres.
struct SphereUnion {
  std::vector<Sphere> spheres;
};

/// Periodic layer {|n . (x - c)| < width / 2} using the nearest periodic image
/// of c; the standard geometry for laminates.
struct Slab {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  double width = 0.5;
};

/// Piecewise-linear interpolant of nodal values on the six-tet split of a
/// grid. Used to pose a fine-grid problem on exactly the linearized geometry
/// of a coarser grid (the split is nested under uniform refinement).
struct GridInterpolant {
  Grid grid;
  std::shared_ptr<const std::vector<double>> values;  // one per node
};

using Shape = std::variant<Plane, Sphere, SphereUnion, Slab, GridInterpolant>;

/// Signed distance of `shape` at x in the periodic cell of size `lengths`.
double eval(const Shape& shape, const Vec3& x, const Vec3& lengths);

/// A level-set region: points with L > 0 belong to `inside_phase`.
struct Region {
  Shape shape;
  int inside_phase = 0;
};

struct Phase {
  std::string name;
  MaterialIso material;
};

/// Ordered regions over a background phase. The first region whose level set
/// is positive at a point decides its phase.
struct PhaseAssembly {
  std::vector<Phase> phases;
  std::vector<Region> regions;
  int background_phase = 0;

  void validate() const;
  int interface_count() const { return int(regions.size()); }
  std::vector<Stiffness66> stiffnesses() const;
};

int phase_at(const PhaseAssembly& assembly, const Vec3& x, const Vec3& lengths);

/// Phase decided from one level-set value per region.
template <class Values>
int phase_from_values(const PhaseAssembly& assembly, const Values& values) {
  for (std::size_t r = 0; r < assembly.regions.size(); ++r) {
    if (values[r] > 0.0) return assembly.regions[r].inside_phase;
  }
  return assembly.background_phase;
}

inline constexpr double kSnapFactor = 1e-8;

/// Nodal level-set values, one field per region (interface), node-major.
struct NodalLevelSet {
  int interfaces = 0;
  std::int64_t nodes = 0;
  std::vector<std::vector<double>> values;
  std::int64_t snapped = 0;

  double at(int iface, std::int64_t node) const { return values[iface][node]; }
};

/// Samples every region's level set at the grid nodes. Values with
/// |L| < 1e-8 h are replaced by +1e-8 h.
NodalLevelSet sample_nodal(const PhaseAssembly& assembly, const Grid& grid);

/// Same phases and region order, with every region's level set replaced by
/// the linear interpolant of its nodal values on `nodal`'s grid.
PhaseAssembly linearized_assembly(const PhaseAssembly& assembly, const Grid& grid, const NodalLevelSet& nodal);

}  // namespace xfft
