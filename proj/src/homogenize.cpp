#include "xfft/homogenize.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xfft {

EffectiveStiffness effective_stiffness(const System& system, const SolverConfig& config) {
  EffectiveStiffness out;
  for (int k = 0; k < 6; ++k) {
    const Strain6 load = Strain6::Unit(k);
    const SolveResult r = solve(system, load, config);
    out.raw.col(k) = r.average_stress;
    out.iterations[k] = r.iterations;
    out.converged &= r.converged;
  }
  out.stiffness = 0.5 * (out.raw + out.raw.transpose());
  const double norm = out.raw.norm();
  out.asymmetry = norm > 0.0 ? (out.raw - out.raw.transpose()).norm() / norm : 0.0;
  return out;
}

double rel_error(double value, double reference) {
  if (reference == 0.0) return std::abs(value);
  return std::abs(value - reference) / std::abs(reference);
}

double hashin_reference(double k_coating, double mu_coating, double k_inclusion, double r_inclusion,
                        double r_coating) {
  if (!(k_coating > 0.0 && mu_coating > 0.0 && k_inclusion > 0.0))
    throw std::invalid_argument("hashin_reference: moduli must be positive");
  if (!(r_inclusion > 0.0 && r_inclusion < r_coating))
    throw std::invalid_argument("hashin_reference: need 0 < r_inclusion < r_coating");
  const double c = std::pow(r_inclusion / r_coating, 3);
  const double dk = k_inclusion - k_coating;
  return k_coating + c * dk / (1.0 + (1.0 - c) * dk / (k_coating + 4.0 * mu_coating / 3.0));
}

double HashinSetup::k_coating() const {
  // With a common Poisson ratio every modulus of the assemblage is
  // proportional to K_c, so neutrality K_eff(K_c) = K_m is linear in K_c.
  const double shear_ratio = 3.0 * (1.0 - 2.0 * poisson) / (2.0 * (1.0 + poisson));
  const double g = hashin_reference(1.0, shear_ratio, contrast, r_inclusion, r_coating);
  return k_matrix / g;
}

MaterialIso HashinSetup::material(double bulk) const {
  return MaterialIso{3.0 * bulk * (1.0 - 2.0 * poisson), poisson};
}

HashinSetup HashinSetup::standard() {
  HashinSetup s;
  s.r_inclusion = 6.0 * std::numbers::e / 5.0;
  s.r_coating = 2.0 * std::numbers::pi;
  return s;
}

PhaseAssembly hashin_assembly(const HashinSetup& setup) {
  PhaseAssembly a;
  a.phases = {{"matrix", setup.material(setup.k_matrix)},
              {"coating", setup.material(setup.k_coating())},
              {"inclusion", setup.material(setup.k_inclusion())}};
  const Vec3 center = Vec3::Constant(0.5 * setup.edge);
  a.regions = {{Sphere{center, setup.r_inclusion}, 2}, {Sphere{center, setup.r_coating}, 1}};
  a.background_phase = 0;
  a.validate();
  return a;
}

double bulk_from_hydrostatic(const Stress6& stress, double trace_strain) {
  return (stress(0) + stress(1) + stress(2)) / (3.0 * trace_strain);
}

Stiffness66 laminate_reference(std::span<const Stiffness66> layers, std::span<const double> fractions,
                               int axis) {
  const int m = int(layers.size());
  if (m == 0 || fractions.size() != layers.size()) throw std::invalid_argument("laminate_reference: size mismatch");
  if (axis < 0 || axis > 2) throw std::invalid_argument("laminate_reference: axis must be 0, 1 or 2");
  // jump(a) = sym(a (x) n) in Mandel form; its transpose maps stress to traction.
  const Vec3 n = Vec3::Unit(axis);
  Eigen::Matrix<double, 6, 3> jump;
  for (int i = 0; i < 3; ++i) {
    const Vec3 a = Vec3::Unit(i);
    jump.col(i) = to_mandel(0.5 * (a * n.transpose() + n * a.transpose()));
  }
  // Unknowns: jump vectors a_k (3m) and the common traction t (3).
  const int dim = 3 * m + 3;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < m; ++k) {
    sys.block(3 * k, 3 * k, 3, 3) = jump.transpose() * layers[k] * jump;
    sys.block(3 * k, 3 * m, 3, 3) = -Mat3::Identity();
    sys.block(3 * m, 3 * k, 3, 3) = fractions[k] * Mat3::Identity();
  }
  const auto lu = sys.fullPivLu();
  Stiffness66 eff = Stiffness66::Zero();
  for (int col = 0; col < 6; ++col) {
    const Strain6 e = Strain6::Unit(col);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < m; ++k) rhs.segment<3>(3 * k) = -jump.transpose() * layers[k] * e;
    const Eigen::VectorXd sol = lu.solve(rhs);
    for (int k = 0; k < m; ++k)
      eff.col(col) += fractions[k] * layers[k] * (e + jump * sol.segment<3>(3 * k));
  }
  return eff;
}

namespace {

struct TetGeometry {
  TetVertices v;
  std::array<std::int64_t, 4> nodes;
  ShapeGradients grads;
};

TetGeometry tet_geometry(const System& system, std::int64_t voxel, int tet) {
  const Grid& g = system.grid();
  const Vec3 h = g.spacing_vec();
  const auto c = g.node_coords(voxel);
  const Vec3 origin(c[0] * h(0), c[1] * h(1), c[2] * h(2));
  TetGeometry geo;
  geo.v = system.topology().tet_vertices(tet, origin, h);
  geo.nodes = tet_nodes(g, system.topology(), voxel, tet);
  geo.grads = p1_grads(geo.v);
  return geo;
}

// Moves x into the periodic image of the voxel's box.
Vec3 image_near(const Grid& g, const Vec3& x, const Vec3& anchor) {
  Vec3 y = x;
  for (int a = 0; a < 3; ++a) {
    const double l = g.length[a];
    y(a) -= l * std::round((y(a) - anchor(a)) / l);
  }
  return y;
}

}  // namespace

std::vector<FieldPoint> field_points(const System& system) {
  const Grid& g = system.grid();
  const auto& layout = system.layout();
  const auto& nodal = system.nodal();
  std::vector<FieldPoint> out;
  out.reserve(std::size_t(g.voxel_count()) * 24);
  for (std::int64_t voxel = 0; voxel < g.voxel_count(); ++voxel) {
    for (int t = 0; t < 6; ++t) {
      const TetGeometry geo = tet_geometry(system, voxel, t);
      const std::int8_t cls = layout.element_class[6 * voxel + t];
      if (cls >= 0) {
        for (const auto& sub : cut_tet(geo.v, tet_levelset(nodal, cls, geo.nodes)))
          for (const auto& q : shunn_ham_4(sub.v, sub.volume)) out.push_back({voxel, t, q.x, q.w, sub.side});
      } else {
        for (const auto& q : shunn_ham_4(geo.v)) out.push_back({voxel, t, q.x, q.w, 0});
      }
    }
  }
  return out;
}

Strain6 strain_in_tet(const System& system, const DofVector& u, const Strain6& strain, std::int64_t voxel,
                      int tet, const Vec3& x, int side) {
  const TetGeometry geo = tet_geometry(system, voxel, tet);
  const Vec3 y = image_near(system.grid(), x, geo.v[0]);
  StrainMatrix b(6, 24);
  b.setZero();
  Eigen::Matrix<double, 24, 1> ue = Eigen::Matrix<double, 24, 1>::Zero();
  for (int a = 0; a < 4; ++a) {
    set_strain_columns(b, 3 * a, geo.grads.col(a));
    for (int c = 0; c < 3; ++c) ue(3 * a + c) = u[3 * geo.nodes[a] + c];
  }
  const auto& layout = system.layout();
  const std::int8_t cls = layout.element_class[6 * voxel + tet];
  if (cls >= 0 && layout.n_x() > 0 && layout.enriched_index[geo.nodes[0]] >= 0) {
    const auto ls = tet_levelset(system.nodal(), cls, geo.nodes);
    const Eigen::Vector4d bary = barycentric(geo.v, geo.grads, y);
    const EnrichmentValue rho = modified_abs(ls, bary, geo.grads, side);
    const auto& scaling = system.caches().enrichment_scaling;
    const std::int64_t xoff = layout.enriched_offset();
    for (int a = 0; a < 4; ++a) {
      const std::int64_t id = layout.enriched_index[geo.nodes[a]];
      set_strain_columns(b, 12 + 3 * a, rho.value * geo.grads.col(a) + bary(a) * rho.gradient);
      for (int c = 0; c < 3; ++c) ue(12 + 3 * a + c) = scaling[3 * id + c] * u[xoff + 3 * id + c];
    }
  }
  return strain + b * ue;
}

Strain6 strain_at(const System& system, const DofVector& u, const Strain6& strain, const Vec3& x) {
  const Grid& g = system.grid();
  const Vec3 w = g.wrap(x);
  std::array<int, 3> idx{};
  Vec3 s;
  for (int a = 0; a < 3; ++a) {
    const double r = w(a) / g.spacing(a);
    idx[a] = std::clamp(int(std::floor(r)), 0, g.n[a] - 1);
    s(a) = r - idx[a];
  }
  const std::int64_t voxel = g.node_index(idx[0], idx[1], idx[2]);
  return strain_in_tet(system, u, strain, voxel, system.topology().locate(s), x, 0);
}

int discrete_phase(const System& system, std::int64_t voxel, int tet, const Vec3& x, int side) {
  const TetGeometry geo = tet_geometry(system, voxel, tet);
  const Vec3 y = image_near(system.grid(), x, geo.v[0]);
  const Eigen::Vector4d bary = barycentric(geo.v, geo.grads, y);
  const auto& nodal = system.nodal();
  std::vector<double> values(nodal.interfaces, 0.0);
  for (int r = 0; r < nodal.interfaces; ++r)
    for (int a = 0; a < 4; ++a) values[r] += bary(a) * nodal.at(r, geo.nodes[a]);
  const std::int8_t cls = system.layout().element_class[6 * voxel + tet];
  if (cls >= 0 && side != 0) values[cls] = double(side);
  return phase_from_values(system.assembly(), values);
}

double l2_norm_field(std::span<const FieldPoint> points,
                     const std::function<double(const FieldPoint&)>& squared) {
  double sum = 0.0;
  for (const auto& p : points) sum += p.w * squared(p);
  return std::sqrt(sum);
}

VoxelFields voxel_averages(const System& system, const DofVector& u, const Strain6& strain) {
  const Grid& g = system.grid();
  const auto stiff = system.assembly().stiffnesses();
  VoxelFields f;
  f.strain.assign(6 * g.voxel_count(), 0.0);
  f.stress.assign(6 * g.voxel_count(), 0.0);
  const double inv = 1.0 / g.voxel_volume();
  for (const auto& p : field_points(system)) {
    const Strain6 e = strain_in_tet(system, u, strain, p.voxel, p.tet, p.x, p.side);
    const Stress6 s = stiff[discrete_phase(system, p.voxel, p.tet, p.x, p.side)] * e;
    for (int k = 0; k < 6; ++k) {
      f.strain[6 * p.voxel + k] += inv * p.w * e(k);
      f.stress[6 * p.voxel + k] += inv * p.w * s(k);
    }
  }
  return f;
}

double local_strain_error_sq(const System& test, const DofVector& u_test, const System& reference,
                             const DofVector& u_ref, const Strain6& strain) {
  for (int a = 0; a < 3; ++a) {
    if (reference.grid().n[a] < test.grid().n[a])
      throw std::invalid_argument("local strain error: reference grid is coarser than the test grid");
  }
  const auto points = field_points(test);
  const double norm = l2_norm_field(points, [&](const FieldPoint& p) {
    const Strain6 e_test = strain_in_tet(test, u_test, strain, p.voxel, p.tet, p.x, p.side);
    const Strain6 e_ref = strain_at(reference, u_ref, strain, p.x);
    return (e_test - e_ref).squaredNorm();
  });
  return norm * norm / test.grid().cell_volume();
}

EnergyBoundCheck energy_bound_check(double energy_gap, double strain_err_sq, double c_minus, double c_plus,
                                    double slack) {
  EnergyBoundCheck r;
  r.energy_gap = energy_gap;
  r.lower = c_minus * strain_err_sq;
  r.upper = c_plus * strain_err_sq;
  r.slack = slack;
  r.passed = r.lower * (1.0 - slack) <= energy_gap && energy_gap <= r.upper * (1.0 + slack);
  return r;
}

SlopeFit fit_slope(std::span<const double> x, std::span<const double> y, bool guard) {
  SlopeFit fit;
  if (x.size() != y.size()) throw std::invalid_argument("fit_slope: size mismatch");
  if (y.size() < 3) {
    fit.note = "fewer than 3 resolutions";
    return fit;
  }
  std::size_t first = 0;
  if (guard && std::abs(y.front()) <= 5.0 * std::abs(y.back())) {
    first = 1;
    fit.note = "coarsest point dropped (pre-asymptotic)";
  }
  const std::size_t count = y.size() - first;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = first; i < y.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) {
      fit.note = "non-positive sample";
      return fit;
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(count);
  my /= double(count);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < y.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  fit.valid = sxx > 0.0;
  fit.slope = fit.valid ? sxy / sxx : 0.0;
  fit.first = first;
  return fit;
}

StudyResult convergence_study(const PhaseAssembly& assembly, const std::array<double, 3>& lengths,
                              std::span<const int> resolutions, const DiscretizationOptions& options,
                              const SolverConfig& config, const Strain6& strain,
                              const std::function<double(const System&, const SolveResult&)>& metric,
                              double reference) {
  StudyResult study;
  int previous = 0;
  for (const int n : resolutions) {
    if (n <= previous) throw std::invalid_argument("convergence study: resolutions must increase");
    previous = n;
    const auto start = std::chrono::steady_clock::now();
    const System system(assembly, Grid({n, n, n}, lengths), options);
    const SolveResult r = solve(system, strain, config);
    StudyRow row;
    row.n = n;
    row.h = lengths[0] / n;
    row.value = metric(system, r);
    row.error = rel_error(row.value, reference);
    row.iterations = r.iterations;
    row.converged = r.converged;
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.enriched_nodes = system.layout().n_x();
    row.history = r.history;
    study.rows.push_back(std::move(row));
  }
  std::vector<double> h, e;
  for (const auto& row : study.rows) {
    h.push_back(row.h);
    e.push_back(row.error);
  }
  study.slope = fit_slope(h, e);
  return study;
}

}  // namespace xfft
