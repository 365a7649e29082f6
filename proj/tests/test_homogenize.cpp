#include "oracles.hpp"
#include "xfft/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace xfft;

TEST_CASE("hashin_reference examples") {
  CHECK(hashin_reference(0.8, 0.5, 0.8, 1.0, 2.0) == doctest::Approx(0.8).epsilon(1e-15));
  // volume fraction close to one tends to the inclusion modulus
  CHECK(hashin_reference(0.8, 0.5, 8.0, 0.999999, 1.0) == doctest::Approx(8.0).epsilon(1e-4));
  CHECK_THROWS_AS(hashin_reference(0.8, 0.5, 8.0, 2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hashin_reference(-0.8, 0.5, 8.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("neutral coated sphere parameters") {
  const HashinSetup s = HashinSetup::standard();
  CHECK(s.r_inclusion == doctest::Approx(1.2 * std::numbers::e).epsilon(1e-15));
  CHECK(s.r_coating == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
  CHECK(std::pow(s.r_inclusion / s.r_coating, 3) == doctest::Approx(0.139923).epsilon(1e-6));
  CHECK(s.material(s.k_coating()).young == doctest::Approx(1.212036).epsilon(1e-6));
  CHECK(s.material(s.k_inclusion()).young == doctest::Approx(12.120361).epsilon(1e-7));
  CHECK(s.material(s.k_matrix).young == doctest::Approx(1.5).epsilon(1e-15));
  const double mu_c = s.material(s.k_coating()).shear_modulus();
  CHECK(hashin_reference(s.k_coating(), mu_c, s.k_inclusion(), s.r_inclusion, s.r_coating) ==
        doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("rel_error examples") {
  CHECK(rel_error(1.0, 1.0) == 0.0);
  CHECK(rel_error(1.001, 1.0) == doctest::Approx(1e-3).epsilon(1e-10));
  CHECK(rel_error(-2.0, -1.0) == doctest::Approx(1.0));
}

TEST_CASE("bulk modulus from a hydrostatic response") {
  Stress6 s;
  s << 3, 3, 3, 0.1, 0.2, 0.3;
  CHECK(bulk_from_hydrostatic(s, 3.0) == doctest::Approx(1.0));
  CHECK(bulk_from_hydrostatic(s, 0.3) == doctest::Approx(10.0));
}

TEST_CASE("l2_norm_field examples") {
  const System s(oracle::sphere_cell(2.0, 0.6, 10.0), Grid({4, 4, 4}, {2.0, 1.5, 1.0}));
  const auto points = field_points(s);
  CHECK(l2_norm_field(points, [](const FieldPoint&) { return 0.0; }) == 0.0);
  CHECK(l2_norm_field(points, [](const FieldPoint&) { return 1.0; }) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-13));

  // linear field on one reference tet against monomial integrals
  const TetVertices ref{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  std::vector<FieldPoint> tet;
  for (const auto& q : shunn_ham_4(ref)) tet.push_back({0, 0, q.x, q.w, 0});
  const double a = 0.7, gx = -1.3, gy = 0.4, gz = 2.2;
  auto f = [&](const Vec3& x) { return a + gx * x(0) + gy * x(1) + gz * x(2); };
  const double norm = l2_norm_field(tet, [&](const FieldPoint& p) { return f(p.x) * f(p.x); });
  using oracle::monomial_integral;
  const double exact = a * a * monomial_integral(0, 0, 0) + 2 * a * (gx * monomial_integral(1, 0, 0) + gy * monomial_integral(0, 1, 0) + gz * monomial_integral(0, 0, 1)) +
                       gx * gx * monomial_integral(2, 0, 0) + gy * gy * monomial_integral(0, 2, 0) + gz * gz * monomial_integral(0, 0, 2) +
                       2 * (gx * gy * monomial_integral(1, 1, 0) + gx * gz * monomial_integral(1, 0, 1) + gy * gz * monomial_integral(0, 1, 1));
  CHECK(norm == doctest::Approx(std::sqrt(exact)).epsilon(1e-14));
}

TEST_CASE("effective stiffness of a homogeneous cell is the phase stiffness") {
  PhaseAssembly a;
  a.phases = {{"solid", {2.0, 0.3}}};
  const System s(a, Grid::cube(4, 1.0));
  const auto eff = effective_stiffness(s, SolverConfig{});
  CHECK(eff.converged);
  const Stiffness66 c = iso_stiffness(a.phases[0].material);
  CHECK((eff.stiffness - c).norm() <= 1e-14 * c.norm());
  for (int it : eff.iterations) CHECK(it == 0);
}

TEST_CASE("closed-form laminate: equal layers and decoupled moduli") {
  const Stiffness66 c = iso_stiffness({2.0, 0.3});
  const std::array<Stiffness66, 2> same{c, c};
  const std::array<double, 2> f{0.3, 0.7};
  CHECK((laminate_reference(same, f, 1) - c).norm() < 1e-13);

  const std::array<Stiffness66, 2> diag{iso_stiffness({1.0, 0.0}), iso_stiffness({4.0, 0.0})};
  const Stiffness66 l = laminate_reference(diag, f, 0);
  CHECK(l(0, 0) == doctest::Approx(1.0 / (0.3 / 1.0 + 0.7 / 4.0)));
  CHECK(l(1, 1) == doctest::Approx(0.3 + 0.7 * 4.0));
  CHECK(l(5, 5) == doctest::Approx(1.0 / (0.3 / 1.0 + 0.7 / 4.0)));
  CHECK(l(3, 3) == doctest::Approx(0.3 + 0.7 * 4.0));
}

TEST_CASE("enriched laminate matches the closed form to 1e-8") {
  SolverConfig cfg;
  cfg.tol = 1e-12;
  for (bool mid : {false, true})
    for (int n : {4, 8}) {
      const auto rep = validate_laminate(n, cfg, mid);
      CAPTURE(rep.name);
      CAPTURE(n);
      CHECK(rep.passed);
    }
}

TEST_CASE("effective stiffness is symmetric for a sphere") {
  const System s(oracle::sphere_cell(1.0, 0.3, 10.0), Grid::cube(8, 1.0));
  SolverConfig cfg;
  cfg.tol = 1e-11;
  const auto eff = effective_stiffness(s, cfg);
  CHECK(eff.converged);
  CHECK(eff.asymmetry < 1e-8);
  CHECK((eff.stiffness - eff.stiffness.transpose()).norm() == 0.0);
}

TEST_CASE("coated sphere at N = 16 recovers the matrix bulk modulus") {
  SolverConfig cfg;
  const auto rep = validate_hashin(16, cfg);
  CHECK(rep.passed);
}

TEST_CASE("energy_bound_check examples") {
  const auto zero = energy_bound_check(0.0, 0.0, 1.2, 30.0);
  CHECK(zero.passed);
  CHECK(zero.lower == 0.0);
  const auto a = energy_bound_check(0.5, 0.1, 1.2, 30.0);
  const auto b = energy_bound_check(0.5, 0.1, 2.4, 60.0);
  CHECK(b.lower == doctest::Approx(2 * a.lower));
  CHECK(b.upper == doctest::Approx(2 * a.upper));
  CHECK(a.passed);
  CHECK_FALSE(energy_bound_check(0.05, 0.1, 1.2, 30.0).passed);
  CHECK_FALSE(energy_bound_check(4.0, 0.1, 1.2, 30.0).passed);
  CHECK(energy_bound_check(0.115, 0.1, 1.2, 30.0).passed);  // inside the 10% slack
}

TEST_CASE("slope fitting") {
  const std::vector<double> h{1.0, 0.5, 0.25, 0.125};
  std::vector<double> e;
  for (double x : h) e.push_back(3.0 * x * x);
  const auto fit = fit_slope(h, e);
  CHECK(fit.valid);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.first == 0);

  const std::vector<double> two_h{1.0, 0.5}, two_e{1.0, 0.25};
  CHECK_FALSE(fit_slope(two_h, two_e).valid);

  // coarsest point within 5x of the finest is dropped as pre-asymptotic
  const std::vector<double> hh{1.0, 0.5, 0.25, 0.125}, ee{0.01, 0.04, 0.01, 0.0025};
  const auto guarded = fit_slope(hh, ee);
  CHECK(guarded.valid);
  CHECK(guarded.first == 1);
  CHECK(guarded.slope == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("local strain error: identical fields vanish, coarser references are rejected") {
  const auto a = oracle::sphere_cell(1.0, 0.3, 10.0);
  const System coarse(a, Grid::cube(4, 1.0));
  const System fine(a, Grid::cube(8, 1.0));
  const Strain6 e = Strain6::Unit(0);
  const SolveResult rc = run_lcg(coarse, e, SolverConfig{});
  const SolveResult rf = run_lcg(fine, e, SolverConfig{});
  CHECK(local_strain_error_sq(coarse, rc.u, coarse, rc.u, e) < 1e-28);
  CHECK(local_strain_error_sq(coarse, rc.u, fine, rf.u, e) > 0.0);
  CHECK_THROWS_AS(local_strain_error_sq(fine, rf.u, coarse, rc.u, e), std::invalid_argument);
}

TEST_CASE("strain evaluation is the load for zero fluctuation and continuous in x") {
  const System s(oracle::sphere_cell(1.0, 0.3, 10.0), Grid::cube(4, 1.0));
  const Strain6 e = Strain6::Unit(3);
  CHECK((strain_at(s, s.zeros(), e, Vec3(0.3, 0.7, 1.2)) - e).norm() == 0.0);
  const SolveResult r = run_lcg(s, e, SolverConfig{});
  const auto vf = voxel_averages(s, r.u, e);
  Vec6 mean = Vec6::Zero();
  for (std::int64_t v = 0; v < s.grid().voxel_count(); ++v)
    for (int k = 0; k < 6; ++k) mean(k) += vf.strain[6 * v + k];
  mean /= double(s.grid().voxel_count());
  CHECK((mean - e).norm() < 1e-12);
  Vec6 stress = Vec6::Zero();
  for (std::int64_t v = 0; v < s.grid().voxel_count(); ++v)
    for (int k = 0; k < 6; ++k) stress(k) += vf.stress[6 * v + k];
  stress /= double(s.grid().voxel_count());
  CHECK((stress - r.average_stress).norm() < 1e-10 * r.average_stress.norm());
}

TEST_CASE("p1 energy on a fixed linearized geometry decreases under refinement") {
  // nested spaces on identical material layout: the coarse energy is an upper bound
  const auto a = oracle::sphere_cell(1.0, 0.3, 10.0);
  const Grid coarse_grid = Grid::cube(4, 1.0);
  const System coarse(a, coarse_grid, {false});
  const PhaseAssembly lin = linearized_assembly(a, coarse_grid, coarse.nodal());
  const System fine(lin, Grid::cube(8, 1.0), {false});
  SolverConfig cfg;
  cfg.tol = 1e-10;
  for (int k = 0; k < 6; ++k) {
    const Strain6 e = Strain6::Unit(k);
    const double wc = e.dot(run_lcg(coarse, e, cfg).average_stress);
    const double wf = e.dot(run_lcg(fine, e, cfg).average_stress);
    CHECK(wc >= wf * (1 - 1e-9));
  }
  // the two discretizations integrate the same material layout
  CHECK((coarse.caches().integrated_stiffness - fine.caches().integrated_stiffness).norm() <=
        1e-12 * coarse.caches().integrated_stiffness.norm());
}
