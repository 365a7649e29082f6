#include "xfft/voigt.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace xfft;

namespace {

Mat3 random_symmetric(std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = d(rng);
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("mandel index order is 11 22 33 23 13 12") {
  CHECK(mandel_index(0, 0) == 0);
  CHECK(mandel_index(2, 2) == 2);
  CHECK(mandel_index(1, 2) == 3);
  CHECK(mandel_index(2, 0) == 4);
  CHECK(mandel_index(0, 1) == 5);
}

TEST_CASE("tensor to Mandel round trip is exact and preserves the Frobenius norm") {
  std::mt19937 rng(7);
  for (int s = 0; s < 100; ++s) {
    const Mat3 e = random_symmetric(rng);
    const Vec6 v = to_mandel(e);
    CHECK((from_mandel(v) - e).norm() <= 1e-15 * e.norm());
    CHECK(v.norm() == doctest::Approx(e.norm()).epsilon(1e-15));
  }
  Mat3 shear = Mat3::Zero();
  shear(0, 1) = shear(1, 0) = 1.0;
  CHECK(to_mandel(shear)(5) == doctest::Approx(kSqrt2));
}

TEST_CASE("iso_stiffness examples") {
  const MaterialIso matrix{1.5, 0.25};
  CHECK(matrix.bulk_modulus() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(matrix.shear_modulus() == doctest::Approx(0.6).epsilon(1e-15));

  const Stiffness66 unit = iso_stiffness({1.0, 0.0});
  CHECK((unit - Mat6::Identity()).norm() < 1e-15);

  CHECK(MaterialIso{1.212036, 0.25}.bulk_modulus() == doctest::Approx(0.808024).epsilon(1e-12));
}

TEST_CASE("isotropic spectrum is 3K once and 2mu five times") {
  const MaterialIso m{2.7, 0.31};
  Eigen::SelfAdjointEigenSolver<Mat6> es(iso_stiffness(m));
  const auto ev = es.eigenvalues();
  const double k3 = 3 * m.bulk_modulus(), mu2 = 2 * m.shear_modulus();
  int n3 = 0, n2 = 0;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(ev(i) - k3) < 1e-12 * k3) ++n3;
    if (std::abs(ev(i) - mu2) < 1e-12 * k3) ++n2;
  }
  CHECK(n3 == 1);
  CHECK(n2 == 5);
  const Stiffness66 c = iso_stiffness(m);
  CHECK((c - c.transpose()).norm() == 0.0);
}

TEST_CASE("material validation rejects the invalid ranges") {
  CHECK_THROWS_AS(MaterialIso({1.0, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MaterialIso({1.0, -1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MaterialIso({0.0, 0.2}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(iso_stiffness({1.0, 0.5}), std::invalid_argument);
  CHECK_NOTHROW(MaterialIso({1.0, -0.99}).validate());
}

TEST_CASE("bulk/shear construction inverts the moduli") {
  const MaterialIso m = material_from_bulk_shear(0.808024, 0.4848144);
  CHECK(m.bulk_modulus() == doctest::Approx(0.808024).epsilon(1e-14));
  CHECK(m.shear_modulus() == doctest::Approx(0.4848144).epsilon(1e-14));
}

TEST_CASE("stiffness_bounds examples") {
  const Stiffness66 c = iso_stiffness({1.5, 0.25});
  const std::array<Stiffness66, 1> one{c};
  auto b = stiffness_bounds(one);
  CHECK(b.lower == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(b.upper == doctest::Approx(3.0).epsilon(1e-14));

  const std::array<Stiffness66, 2> dup{c, c};
  const auto bd = stiffness_bounds(dup);
  CHECK(bd.lower == b.lower);
  CHECK(bd.upper == b.upper);

  const MaterialIso soft = material_from_bulk_shear(1.0, 0.6), stiff = material_from_bulk_shear(10.0, 6.0);
  const std::array<Stiffness66, 2> pair{iso_stiffness(soft), iso_stiffness(stiff)};
  const auto bp = stiffness_bounds(pair);
  CHECK(bp.upper / bp.lower == doctest::Approx(25.0).epsilon(1e-13));
  // brute-force eigensolve
  double lo = 1e300, hi = -1e300;
  for (const auto& m : pair) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(m);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  CHECK(bp.lower == doctest::Approx(lo).epsilon(1e-13));
  CHECK(bp.upper == doctest::Approx(hi).epsilon(1e-13));
}

TEST_CASE("stiffness_bounds rejects empty and indefinite input") {
  CHECK_THROWS_AS(stiffness_bounds({}), std::invalid_argument);
  Stiffness66 bad = Mat6::Identity();
  bad(2, 2) = -1.0;
  const std::array<Stiffness66, 1> one{bad};
  CHECK_THROWS_AS(stiffness_bounds(one), std::invalid_argument);
}

TEST_CASE("Mandel contraction equals the full fourth-order contraction") {
  std::mt19937 rng(11);
  const Stiffness66 c = iso_stiffness({3.1, 0.17});
  for (int s = 0; s < 200; ++s) {
    const Mat3 e = random_symmetric(rng);
    const Vec6 v = to_mandel(e);
    const double mandel = v.dot(c * v);
    CHECK(mandel == doctest::Approx(contract_full(e, c)).epsilon(1e-13));
  }
}

TEST_CASE("bounds sandwich the energy of random strains") {
  std::mt19937 rng(3);
  const std::array<Stiffness66, 3> phases{iso_stiffness({1.5, 0.25}), iso_stiffness({15.0, 0.3}),
                                          iso_stiffness({0.7, -0.2})};
  const auto b = stiffness_bounds(phases);
  for (const auto& c : phases) {
    for (int s = 0; s < 1000; ++s) {
      const Vec6 v = to_mandel(random_symmetric(rng));
      const double w = v.dot(c * v), n2 = v.squaredNorm();
      CHECK(w >= b.lower * n2 * (1 - 1e-14));
      CHECK(w <= b.upper * n2 * (1 + 1e-14));
    }
  }
}
