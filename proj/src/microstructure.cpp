#include "xfft/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xfft {

namespace {

Vec3 wrap_cell(const Vec3& x, const Vec3& lengths) {
  Vec3 w;
  for (int a = 0; a < 3; ++a) {
    w(a) = x(a) - lengths(a) * std::floor(x(a) / lengths(a));
    if (w(a) >= lengths(a)) w(a) = 0.0;
  }
  return w;
}

Vec3 nearest_image(const Vec3& d, const Vec3& lengths) {
  Vec3 r;
  for (int a = 0; a < 3; ++a) r(a) = d(a) - lengths(a) * std::round(d(a) / lengths(a));
  return r;
}

double sphere_distance(const Sphere& s, const Vec3& x, const Vec3& lengths) {
  return s.radius - nearest_image(x - s.center, lengths).norm();
}

struct Evaluator {
  const Vec3& x;
  const Vec3& lengths;

  double operator()(const Plane& p) const {
    return p.normal.normalized().dot(wrap_cell(x, lengths) - p.point);
  }
  double operator()(const Sphere& s) const { return sphere_distance(s, x, lengths); }
  double operator()(const SphereUnion& u) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : u.spheres) best = std::max(best, sphere_distance(s, x, lengths));
    return best;
  }
  double operator()(const Slab& s) const {
    const double t = s.normal.normalized().dot(nearest_image(x - s.center, lengths));
    return 0.5 * s.width - std::abs(t);
  }
  double operator()(const GridInterpolant& g) const {
    const Vec3 w = g.grid.wrap(x);
    std::array<int, 3> idx{};
    Vec3 s;
    for (int a = 0; a < 3; ++a) {
      const double r = w(a) / g.grid.spacing(a);
      idx[a] = std::clamp(int(std::floor(r)), 0, g.grid.n[a] - 1);
      s(a) = r - idx[a];
    }
    // Kuhn simplex with s_p0 >= s_p1 >= s_p2: path 0 -> e_p0 -> e_p0 + e_p1 -> 7.
    std::array<int, 3> p{0, 1, 2};
    std::sort(p.begin(), p.end(), [&](int a, int b) { return s(a) > s(b); });
    const auto& v = *g.values;
    auto at = [&](int corner) {
      return v[g.grid.node_index(idx[0] + (corner & 1), idx[1] + ((corner >> 1) & 1), idx[2] + ((corner >> 2) & 1))];
    };
    const int c1 = 1 << p[0];
    const int c2 = c1 | (1 << p[1]);
    return (1.0 - s(p[0])) * at(0) + (s(p[0]) - s(p[1])) * at(c1) + (s(p[1]) - s(p[2])) * at(c2) +
           s(p[2]) * at(7);
  }
};

}  // namespace

double eval(const Shape& shape, const Vec3& x, const Vec3& lengths) {
  return std::visit(Evaluator{x, lengths}, shape);
}

void PhaseAssembly::validate() const {
  if (phases.empty()) throw std::invalid_argument("phase assembly has no phases");
  const int count = int(phases.size());
  if (background_phase < 0 || background_phase >= count) {
    throw std::invalid_argument("background phase index out of range");
  }
  for (const auto& r : regions) {
    if (r.inside_phase < 0 || r.inside_phase >= count) {
      throw std::invalid_argument("region refers to an undefined phase");
    }
  }
  if (regions.size() > 127) throw std::invalid_argument("too many interfaces (max 127)");
  for (const auto& p : phases) p.material.validate();
}

std::vector<Stiffness66> PhaseAssembly::stiffnesses() const {
  std::vector<Stiffness66> out;
  out.reserve(phases.size());
  for (const auto& p : phases) out.push_back(iso_stiffness(p.material));
  return out;
}

int phase_at(const PhaseAssembly& assembly, const Vec3& x, const Vec3& lengths) {
  for (const auto& r : assembly.regions) {
    if (eval(r.shape, x, lengths) > 0.0) return r.inside_phase;
  }
  return assembly.background_phase;
}

NodalLevelSet sample_nodal(const PhaseAssembly& assembly, const Grid& grid) {
  NodalLevelSet out;
  out.interfaces = assembly.interface_count();
  out.nodes = grid.node_count();
  out.values.assign(out.interfaces, std::vector<double>(out.nodes));
  const Vec3 lengths(grid.length[0], grid.length[1], grid.length[2]);
  const double snap = kSnapFactor * grid.min_spacing();
  for (int r = 0; r < out.interfaces; ++r) {
    auto& field = out.values[r];
    for (std::int64_t node = 0; node < out.nodes; ++node) {
      double v = eval(assembly.regions[r].shape, grid.node_position(node), lengths);
      if (std::abs(v) < snap) {
        v = snap;
        ++out.snapped;
      }
      field[node] = v;
    }
  }
  return out;
}

PhaseAssembly linearized_assembly(const PhaseAssembly& assembly, const Grid& grid, const NodalLevelSet& nodal) {
  PhaseAssembly out = assembly;
  for (int r = 0; r < nodal.interfaces; ++r) {
    out.regions[r].shape = GridInterpolant{grid, std::make_shared<const std::vector<double>>(nodal.values[r])};
  }
  return out;
}

}  // namespace xfft
