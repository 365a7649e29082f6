#include "xfft/mesh.hpp"

#include "xfft/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xfft {

Grid::Grid(std::array<int, 3> counts, std::array<double, 3> lengths) : n(counts), length(lengths) {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 2) throw std::invalid_argument("grid needs at least 2 voxels per axis");
    if (!(length[a] > 0.0)) throw std::invalid_argument("cell lengths must be positive");
  }
}

double Grid::min_spacing() const { return std::min({spacing(0), spacing(1), spacing(2)}); }

std::int64_t Grid::node_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
  auto wrap = [](std::int64_t v, int m) {
    v %= m;
    return v < 0 ? v + m : v;
  };
  return wrap(i, n[0]) + std::int64_t(n[0]) * (wrap(j, n[1]) + std::int64_t(n[1]) * wrap(k, n[2]));
}

std::array<int, 3> Grid::node_coords(std::int64_t index) const {
  const int i = int(index % n[0]);
  index /= n[0];
  const int j = int(index % n[1]);
  return {i, j, int(index / n[1])};
}

Vec3 Grid::node_position(std::int64_t index) const {
  const auto c = node_coords(index);
  return {c[0] * spacing(0), c[1] * spacing(1), c[2] * spacing(2)};
}

Vec3 Grid::wrap(const Vec3& x) const {
  Vec3 w;
  for (int a = 0; a < 3; ++a) {
    w(a) = x(a) - length[a] * std::floor(x(a) / length[a]);
    if (w(a) >= length[a]) w(a) = 0.0;
  }
  return w;
}

ElementTopology build_topology() {
  // Kuhn split, one orientation for every voxel: the odd permutations get
  // their middle vertices swapped so that all tets are positively oriented.
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  ElementTopology topo;
  for (int t = 0; t < 6; ++t) {
    const auto& p = perms[t];
    const int v1 = 1 << p[0];
    const int v2 = v1 | (1 << p[1]);
    std::array<int, 4> c{0, v1, v2, 7};
    const Vec3 e1 = ElementTopology::corner_offset(c[1]);
    const Vec3 e2 = ElementTopology::corner_offset(c[2]);
    const Vec3 e3 = ElementTopology::corner_offset(c[3]);
    if (e1.dot(e2.cross(e3)) < 0.0) std::swap(c[1], c[2]);
    topo.corners[t] = c;
    topo.perm[t] = p;
  }
  return topo;
}

std::array<Vec3, 4> ElementTopology::tet_vertices(int t, const Vec3& origin, const Vec3& h) const {
  std::array<Vec3, 4> v;
  for (int a = 0; a < 4; ++a) {
    v[a] = origin + corner_offset(corners[t][a]).cwiseProduct(h);
  }
  return v;
}

int ElementTopology::locate(const Vec3& s) const {
  for (int t = 0; t < kTetsPerVoxel; ++t) {
    const auto& p = perm[t];
    if (s(p[0]) >= s(p[1]) && s(p[1]) >= s(p[2])) return t;
  }
  return 0;  // unreachable for finite s
}

std::array<std::int64_t, 8> voxel_nodes(const Grid& grid, std::int64_t voxel) {
  const auto c = grid.node_coords(voxel);
  std::array<std::int64_t, 8> out;
  for (int corner = 0; corner < 8; ++corner) {
    out[corner] = grid.node_index(c[0] + (corner & 1), c[1] + ((corner >> 1) & 1),
                                  c[2] + ((corner >> 2) & 1));
  }
  return out;
}

std::array<std::int64_t, 4> tet_nodes(const Grid& grid, const ElementTopology& topo,
                                      std::int64_t voxel, int t) {
  const auto vn = voxel_nodes(grid, voxel);
  return {vn[topo.corners[t][0]], vn[topo.corners[t][1]], vn[topo.corners[t][2]],
          vn[topo.corners[t][3]]};
}

int DofLayout::gather_map(const Grid& grid, const ElementTopology& topo, std::int64_t voxel,
                          int t, std::array<std::int64_t, 24>& slots) const {
  const auto nodes = tet_nodes(grid, topo, voxel, t);
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 3; ++c) slots[3 * a + c] = 3 * nodes[a] + c;
  const std::int8_t cls = element_class[voxel * 6 + t];
  if (cls < 0 || enriched_nodes.empty()) return 12;
  for (int a = 0; a < 4; ++a) {
    const std::int32_t x = enriched_index[nodes[a]];
    if (x < 0) return 12;  // enrichment disabled
    for (int c = 0; c < 3; ++c) slots[12 + 3 * a + c] = enriched_offset() + 3 * std::int64_t(x) + c;
  }
  return 24;
}

DofLayout detect_enrichment(const NodalLevelSet& nodal, const ElementTopology& topo,
                            const Grid& grid, bool enrich) {
  DofLayout layout;
  layout.n_fe = grid.node_count();
  layout.element_class.assign(grid.voxel_count() * 6, kUncut);
  std::vector<char> in_j(enrich ? layout.n_fe : 0, 0);

  for (std::int64_t voxel = 0; voxel < grid.voxel_count(); ++voxel) {
    for (int t = 0; t < 6; ++t) {
      const auto nodes = tet_nodes(grid, topo, voxel, t);
      int cut_by = kUncut;
      int cut_count = 0;
      for (int r = 0; r < nodal.interfaces; ++r) {
        int positive = 0;
        for (auto node : nodes) positive += nodal.at(r, node) > 0.0;
        if (positive != 0 && positive != 4) {
          cut_by = r;
          ++cut_count;
        }
      }
      auto& cls = layout.element_class[voxel * 6 + t];
      if (cut_count == 1) {
        cls = std::int8_t(cut_by);
        ++layout.n_cut;
        if (enrich) {
          for (auto node : nodes) in_j[node] = 1;
        }
      } else if (cut_count > 1) {
        cls = kMultiCut;
        ++layout.n_multi;
      }
    }
  }

  layout.enriched_index.assign(layout.n_fe, -1);
  if (enrich) {
    for (std::int64_t node = 0; node < layout.n_fe; ++node) {
      if (in_j[node]) {
        layout.enriched_index[node] = std::int32_t(layout.enriched_nodes.size());
        layout.enriched_nodes.push_back(node);
      }
    }
  }
  return layout;
}

}  // namespace xfft
