#include "xfft/element.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xfft {

double signed_volume(const TetVertices& v) {
  return (v[1] - v[0]).dot((v[2] - v[0]).cross(v[3] - v[0])) / 6.0;
}

ShapeGradients p1_grads(const TetVertices& v) {
  Mat3 jac;
  jac.col(0) = v[1] - v[0];
  jac.col(1) = v[2] - v[0];
  jac.col(2) = v[3] - v[0];
  const double det = jac.determinant();
  const double scale = jac.col(0).norm() * jac.col(1).norm() * jac.col(2).norm();
  if (!(std::abs(det) > 1e-14 * scale)) throw std::invalid_argument("p1_grads: degenerate tetrahedron");
  const Mat3 inv = jac.inverse();
  ShapeGradients g;
  for (int a = 0; a < 3; ++a) g.col(a + 1) = inv.row(a).transpose();
  g.col(0) = -(g.col(1) + g.col(2) + g.col(3));
  return g;
}

Eigen::Vector4d barycentric(const TetVertices& v, const ShapeGradients& grads, const Vec3& x) {
  Eigen::Vector4d b;
  const Vec3 d = x - v[0];
  for (int a = 1; a < 4; ++a) b(a) = grads.col(a).dot(d);
  b(0) = 1.0 - b(1) - b(2) - b(3);
  return b;
}

EnrichmentValue modified_abs(const std::array<double, 4>& nodal, const Eigen::Vector4d& bary,
                             const ShapeGradients& grads, int side) {
  double interp = 0.0;
  double interp_abs = 0.0;
  for (int a = 0; a < 4; ++a) {
    interp += bary(a) * nodal[a];
    interp_abs += bary(a) * std::abs(nodal[a]);
  }
  const double s = side != 0 ? double(side) : (interp > 0.0 ? 1.0 : -1.0);
  EnrichmentValue e;
  e.value = interp_abs - s * interp;
  for (int a = 0; a < 4; ++a) e.gradient += (std::abs(nodal[a]) - s * nodal[a]) * grads.col(a);
  return e;
}

namespace {

SubTet make_subtet(Vec3 a, Vec3 b, Vec3 c, Vec3 d, int side) {
  SubTet s{{a, b, c, d}, side, 0.0};
  double vol = signed_volume(s.v);
  if (vol < 0.0) {
    std::swap(s.v[2], s.v[3]);
    vol = -vol;
  }
  s.volume = vol;
  return s;
}

// Prism with triangles (a0, a1, a2) and (b0, b1, b2), lateral edges ai-bi.
void split_prism(const std::array<Vec3, 3>& a, const std::array<Vec3, 3>& b, int side,
                 std::vector<SubTet>& out) {
  out.push_back(make_subtet(a[0], a[1], a[2], b[0], side));
  out.push_back(make_subtet(a[1], a[2], b[0], b[1], side));
  out.push_back(make_subtet(a[2], b[0], b[1], b[2], side));
}

}  // namespace

std::vector<SubTet> cut_tet(const TetVertices& v, const std::array<double, 4>& nodal, int* dropped) {
  const double parent = std::abs(signed_volume(v));
  std::vector<SubTet> out;
  int positive = 0;
  for (double l : nodal) positive += l > 0.0;

  if (positive == 0 || positive == 4) {
    out.push_back(make_subtet(v[0], v[1], v[2], v[3], positive == 4 ? 1 : -1));
    return out;
  }

  auto crossing = [&](int i, int j) {
    const double t = nodal[i] / (nodal[i] - nodal[j]);
    return Vec3(v[i] + t * (v[j] - v[i]));
  };
  auto side_of = [&](int i) { return nodal[i] > 0.0 ? 1 : -1; };

  if (positive == 1 || positive == 3) {
    const bool lone_positive = positive == 1;
    int lone = 0;
    while ((nodal[lone] > 0.0) != lone_positive) ++lone;
    std::array<int, 3> rest{};
    for (int a = 0, r = 0; a < 4; ++a)
      if (a != lone) rest[r++] = a;
    const std::array<Vec3, 3> cut{crossing(lone, rest[0]), crossing(lone, rest[1]),
                                  crossing(lone, rest[2])};
    out.push_back(make_subtet(v[lone], cut[0], cut[1], cut[2], side_of(lone)));
    split_prism(cut, {v[rest[0]], v[rest[1]], v[rest[2]]}, side_of(rest[0]), out);
  } else {
    std::array<int, 2> p{}, m{};
    for (int a = 0, ip = 0, im = 0; a < 4; ++a) {
      if (nodal[a] > 0.0)
        p[ip++] = a;
      else
        m[im++] = a;
    }
    const int a = p[0], b = p[1], c = m[0], d = m[1];
    const Vec3 ac = crossing(a, c), ad = crossing(a, d), bc = crossing(b, c), bd = crossing(b, d);
    split_prism({v[a], ac, ad}, {v[b], bc, bd}, 1, out);
    split_prism({v[c], ac, bc}, {v[d], ad, bd}, -1, out);
  }

  const double threshold = kSliverFraction * parent;
  const auto removed = std::erase_if(out, [&](const SubTet& s) { return s.volume < threshold; });
  if (dropped) *dropped += int(removed);
  const double kept = std::accumulate(out.begin(), out.end(), 0.0,
                                      [](double acc, const SubTet& s) { return acc + s.volume; });
  const double scale = parent / kept;
  for (auto& s : out) s.volume *= scale;
  return out;
}

std::array<QuadPoint, 4> shunn_ham_4(const TetVertices& v, double volume) {
  // Barycentric permutations of (a, b, b, b), a = (5 + 3 sqrt5) / 20, b = (5 - sqrt5) / 20.
  constexpr double a = 0.58541019662496845446;
  constexpr double b = 0.13819660112501051518;
  std::array<QuadPoint, 4> q;
  for (int k = 0; k < 4; ++k) {
    Vec3 x = Vec3::Zero();
    for (int j = 0; j < 4; ++j) x += (j == k ? a : b) * v[j];
    q[k] = {x, 0.25 * volume};
  }
  return q;
}

std::array<QuadPoint, 4> shunn_ham_4(const TetVertices& v) {
  return shunn_ham_4(v, std::abs(signed_volume(v)));
}

std::vector<QuadPoint> shunn_ham_rule(const TetVertices& v, double volume) {
  const auto q = shunn_ham_4(v, volume);
  return {q.begin(), q.end()};
}

void set_strain_columns(StrainMatrix& b, int col, const Vec3& g) {
  const double s = 1.0 / kSqrt2;
  // phi e_x
  b(0, col) = g(0);
  b(1, col) = 0.0;
  b(2, col) = 0.0;
  b(3, col) = 0.0;
  b(4, col) = s * g(2);
  b(5, col) = s * g(1);
  // phi e_y
  b(0, col + 1) = 0.0;
  b(1, col + 1) = g(1);
  b(2, col + 1) = 0.0;
  b(3, col + 1) = s * g(2);
  b(4, col + 1) = 0.0;
  b(5, col + 1) = s * g(0);
  // phi e_z
  b(0, col + 2) = 0.0;
  b(1, col + 2) = 0.0;
  b(2, col + 2) = g(2);
  b(3, col + 2) = s * g(1);
  b(4, col + 2) = s * g(0);
  b(5, col + 2) = 0.0;
}

namespace {

ElementMatrices empty_matrices(int ndof) {
  ElementMatrices m;
  m.stiffness = Eigen::MatrixXd::Zero(ndof, ndof);
  m.load = Eigen::MatrixXd::Zero(ndof, 6);
  m.norm_diag = Eigen::VectorXd::Zero(ndof);
  return m;
}

ElementMatrices constant_strain_element(const ShapeGradients& grads, const Mat6& c_integrated,
                                        double volume, int quad_points) {
  StrainMatrix b(6, 12);
  for (int a = 0; a < 4; ++a) set_strain_columns(b, 3 * a, grads.col(a));
  ElementMatrices m;
  m.load = b.transpose() * c_integrated;
  m.stiffness = m.load * b;
  m.stiffness = 0.5 * (m.stiffness + m.stiffness.transpose()).eval();
  m.integrated_stiffness = c_integrated;
  m.norm_diag = volume * b.colwise().squaredNorm().transpose();
  m.volume = volume;
  m.quad_points = quad_points;
  return m;
}

}  // namespace

ElementMatrices assemble_plain(const TetVertices& v, const Stiffness66& c) {
  const double volume = std::abs(signed_volume(v));
  return constant_strain_element(p1_grads(v), volume * c, volume, 4);
}

ElementMatrices assemble_p1_quadrature(const TetVertices& v, std::span<const QuadPoint> points,
                                       std::span<const Stiffness66> stiffness) {
  Mat6 c_int = Mat6::Zero();
  double volume = 0.0;
  for (std::size_t q = 0; q < points.size(); ++q) {
    c_int += points[q].w * stiffness[q];
    volume += points[q].w;
  }
  return constant_strain_element(p1_grads(v), c_int, volume, int(points.size()));
}

ElementMatrices assemble_enriched(const TetVertices& v, const std::array<double, 4>& nodal,
                                  const Stiffness66& c_pos, const Stiffness66& c_neg, TetRule rule,
                                  int* dropped) {
  const ShapeGradients grads = p1_grads(v);
  ElementMatrices m = empty_matrices(24);
  StrainMatrix b(6, 24);
  Eigen::Matrix<double, 6, 24> cb;
  for (const auto& sub : cut_tet(v, nodal, dropped)) {
    const Stiffness66& c = sub.side > 0 ? c_pos : c_neg;
    for (const auto& q : rule(sub.v, sub.volume)) {
      const Eigen::Vector4d bary = barycentric(v, grads, q.x);
      const EnrichmentValue rho = modified_abs(nodal, bary, grads, sub.side);
      for (int a = 0; a < 4; ++a) {
        set_strain_columns(b, 3 * a, grads.col(a));
        set_strain_columns(b, 12 + 3 * a, rho.value * grads.col(a) + bary(a) * rho.gradient);
      }
      cb.noalias() = c * b;
      m.stiffness.noalias() += q.w * b.transpose() * cb;
      m.load.noalias() += q.w * cb.transpose();
      m.integrated_stiffness += q.w * c;
      m.norm_diag += q.w * b.colwise().squaredNorm().transpose();
      m.volume += q.w;
      ++m.quad_points;
    }
  }
  m.stiffness = 0.5 * (m.stiffness + m.stiffness.transpose()).eval();
  return m;
}

void apply_enrichment_scaling(ElementMatrices& m, std::span<const double> factors) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(24);
  for (int k = 0; k < 12; ++k) s(12 + k) = factors[k];
  m.stiffness = s.asDiagonal() * m.stiffness * s.asDiagonal();
  m.load = s.asDiagonal() * m.load;
  m.norm_diag = m.norm_diag.cwiseProduct(s.cwiseAbs2());
}

std::array<double, 4> tet_levelset(const NodalLevelSet& nodal, int iface,
                                   const std::array<std::int64_t, 4>& nodes) {
  return {nodal.at(iface, nodes[0]), nodal.at(iface, nodes[1]), nodal.at(iface, nodes[2]),
          nodal.at(iface, nodes[3])};
}

int side_phase(const PhaseAssembly& assembly, const NodalLevelSet& nodal, int iface, int side,
               std::int64_t probe_node) {
  std::vector<double> values(nodal.interfaces);
  for (int r = 0; r < nodal.interfaces; ++r) values[r] = nodal.at(r, probe_node);
  if (iface >= 0) values[iface] = double(side);
  return phase_from_values(assembly, values);
}

namespace {

void accumulate_voxel(ReferenceBlocks& ref, const ElementTopology& topo, int t) {
  for (int a = 0; a < 4; ++a) {
    const int ca = topo.corners[t][a];
    ref.voxel_load.block<3, 6>(3 * ca, 0) += ref.tet_load[t].block<3, 6>(3 * a, 0);
    for (int b = 0; b < 4; ++b) {
      const int cbn = topo.corners[t][b];
      ref.voxel_stiffness.block<3, 3>(3 * ca, 3 * cbn) += ref.tet_stiffness[t].block<3, 3>(3 * a, 3 * b);
    }
  }
}

}  // namespace

ElementCaches build_element_caches(const PhaseAssembly& assembly, const Grid& grid,
                                   const ElementTopology& topo, const DofLayout& layout,
                                   const NodalLevelSet& nodal, const CacheOptions& options) {
  assembly.validate();
  ElementCaches caches;
  caches.grid = grid;
  caches.topo = topo;
  const auto stiff = assembly.stiffnesses();
  const Vec3 h = grid.spacing_vec();
  const double tet_volume = grid.voxel_volume() / 6.0;

  caches.reference.resize(stiff.size());
  for (std::size_t p = 0; p < stiff.size(); ++p) {
    auto& ref = caches.reference[p];
    ref.voxel_stiffness.setZero();
    ref.voxel_load.setZero();
    for (int t = 0; t < 6; ++t) {
      const auto m = assemble_plain(topo.tet_vertices(t, Vec3::Zero(), h), stiff[p]);
      ref.tet_stiffness[t] = m.stiffness;
      ref.tet_load[t] = m.load;
      accumulate_voxel(ref, topo, t);
    }
  }

  const std::int64_t voxels = grid.voxel_count();
  const bool enrich = options.enrich && layout.n_x() > 0;
  caches.voxel_phase.assign(voxels, 0);
  caches.voxel_detail.assign(voxels, -1);
  caches.enrichment_norms.assign(3 * layout.n_x(), 0.0);
  std::vector<double> phase_volume(stiff.size(), 0.0);
  std::vector<double> values(nodal.interfaces);

  for (std::int64_t voxel = 0; voxel < voxels; ++voxel) {
    const auto coords = grid.node_coords(voxel);
    const Vec3 origin(coords[0] * h(0), coords[1] * h(1), coords[2] * h(2));
    bool uncut = true;
    for (int t = 0; t < 6; ++t) uncut &= layout.element_class[voxel * 6 + t] == kUncut;

    if (uncut) {
      const int phase = side_phase(assembly, nodal, -1, 0, voxel);
      caches.voxel_phase[voxel] = std::uint8_t(phase);
      phase_volume[phase] += grid.voxel_volume();
      ++caches.stats.simple_voxels;
      caches.stats.max_quad_points_per_voxel = std::max(caches.stats.max_quad_points_per_voxel, 24);
      continue;
    }

    caches.voxel_detail[voxel] = std::int32_t(caches.details.size());
    int voxel_points = 0;
    for (int t = 0; t < 6; ++t) {
      const std::int8_t cls = layout.element_class[voxel * 6 + t];
      const auto nodes = tet_nodes(grid, topo, voxel, t);
      const auto verts = topo.tet_vertices(t, origin, h);
      TetRecord rec;
      if (cls == kUncut) {
        rec.kind = TetKind::Reference;
        rec.phase = std::uint8_t(side_phase(assembly, nodal, -1, 0, nodes[0]));
        phase_volume[rec.phase] += tet_volume;
        voxel_points += 4;
      } else if (cls >= 0 && enrich) {
        const auto ls = tet_levelset(nodal, cls, nodes);
        const int p_pos = side_phase(assembly, nodal, cls, 1, nodes[0]);
        const int p_neg = side_phase(assembly, nodal, cls, -1, nodes[0]);
        int dropped = 0;
        const auto m = assemble_enriched(verts, ls, stiff[p_pos], stiff[p_neg], &shunn_ham_rule, &dropped);
        caches.stats.dropped_subtets += dropped;
        rec.kind = TetKind::Enriched;
        rec.index = std::int32_t(caches.enriched_ids.size());
        std::array<std::int32_t, 4> ids{};
        for (int a = 0; a < 4; ++a) {
          ids[a] = layout.enriched_index[nodes[a]];
          for (int c = 0; c < 3; ++c) caches.enrichment_norms[3 * ids[a] + c] += m.norm_diag(12 + 3 * a + c);
        }
        caches.enriched_ids.push_back(ids);
        caches.enriched_interface.push_back(cls);
        caches.enriched_stiffness.insert(caches.enriched_stiffness.end(), m.stiffness.data(),
                                         m.stiffness.data() + 576);
        caches.enriched_load.insert(caches.enriched_load.end(), m.load.data(), m.load.data() + 144);
        caches.integrated_stiffness += m.integrated_stiffness;
        voxel_points += m.quad_points;
        ++caches.stats.enriched_tets;
      } else {
        // Unenriched tet with a resolved material: cut tets without enrichment
        // are integrated on their subtets, multi-cut tets use the phase of the
        // linearized level sets at the quadrature points.
        std::vector<QuadPoint> points;
        std::vector<Stiffness66> cs;
        if (cls >= 0) {
          const auto ls = tet_levelset(nodal, cls, nodes);
          int dropped = 0;
          for (const auto& sub : cut_tet(verts, ls, &dropped)) {
            const int phase = side_phase(assembly, nodal, cls, sub.side, nodes[0]);
            for (const auto& q : shunn_ham_4(sub.v, sub.volume)) {
              points.push_back(q);
              cs.push_back(stiff[phase]);
            }
          }
          caches.stats.dropped_subtets += dropped;
        } else {
          const ShapeGradients grads = p1_grads(verts);
          for (const auto& q : shunn_ham_4(verts)) {
            const Eigen::Vector4d bary = barycentric(verts, grads, q.x);
            for (int r = 0; r < nodal.interfaces; ++r) {
              values[r] = 0.0;
              for (int a = 0; a < 4; ++a) values[r] += bary(a) * nodal.at(r, nodes[a]);
            }
            points.push_back(q);
            cs.push_back(stiff[phase_from_values(assembly, values)]);
          }
          ++caches.stats.multi_cut_tets;
        }
        const auto m = assemble_p1_quadrature(verts, points, cs);
        rec.kind = TetKind::Individual;
        rec.index = std::int32_t(caches.individual_load.size() / 72);
        caches.individual_stiffness.insert(caches.individual_stiffness.end(), m.stiffness.data(),
                                           m.stiffness.data() + 144);
        caches.individual_load.insert(caches.individual_load.end(), m.load.data(), m.load.data() + 72);
        caches.integrated_stiffness += m.integrated_stiffness;
        voxel_points += m.quad_points;
        ++caches.stats.individual_tets;
      }
      caches.details.push_back(rec);
    }
    caches.stats.max_quad_points_per_voxel = std::max(caches.stats.max_quad_points_per_voxel, voxel_points);
  }

  for (std::size_t p = 0; p < stiff.size(); ++p) caches.integrated_stiffness += phase_volume[p] * stiff[p];

  // Internal scaling: every enriched dof gets unit symmetrized-gradient L2 norm.
  caches.enrichment_scaling.assign(caches.enrichment_norms.size(), 0.0);
  for (std::size_t k = 0; k < caches.enrichment_norms.size(); ++k) {
    const double d = caches.enrichment_norms[k];
    if (d < 1e-300) {
      ++caches.stats.dropped_enriched_dofs;
    } else {
      caches.enrichment_scaling[k] = 1.0 / std::sqrt(d);
    }
  }
  for (std::size_t e = 0; e < caches.enriched_ids.size(); ++e) {
    Eigen::Map<Mat24> a(&caches.enriched_stiffness[576 * e]);
    Eigen::Map<Mat24x6> l(&caches.enriched_load[144 * e]);
    Eigen::Matrix<double, 24, 1> s = Eigen::Matrix<double, 24, 1>::Ones();
    for (int n = 0; n < 4; ++n)
      for (int c = 0; c < 3; ++c) s(12 + 3 * n + c) = caches.enrichment_scaling[3 * caches.enriched_ids[e][n] + c];
    a = s.asDiagonal() * a * s.asDiagonal();
    l = s.asDiagonal() * l;
  }
  return caches;
}

}  // namespace xfft
