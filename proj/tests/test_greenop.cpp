#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace xfft;

namespace {

double dot_span(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_span(std::span<const double> a) { return std::sqrt(dot_span(a, a)); }

void check_round_trip(const Grid& g, unsigned seed) {
  const GreenOperator green(g, build_topology());
  const auto v = oracle::random_mean_free(g, seed);
  std::vector<double> f(v.size()), z(v.size());
  apply_stencil(g, green.stencil(), v, f);
  green.apply(f, z);
  double err = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(z[i] - v[i]));
  CHECK(err <= 1e-12 * norm_span(v));
}

}  // namespace

TEST_CASE("stencil rows annihilate constants") {
  const Grid g = Grid::cube(4, 1.0);
  const Stencil st = stencil_from_voxel(unit_voxel_matrix(g, build_topology()));
  Mat3 sum = Mat3::Zero();
  for (const auto& b : st) sum += b;
  CHECK(sum.norm() < 1e-14);
}

TEST_CASE("symbol is Hermitian PSD, conjugate symmetric and zero at the origin") {
  const Grid g = Grid::cube(8, 1.0);
  const GreenOperator green(g, build_topology());
  CHECK(green.green_block({0, 0, 0}).norm() == 0.0);
  for (int k0 = 0; k0 < 8; ++k0)
    for (int k1 = 0; k1 < 8; ++k1)
      for (int k2 = 0; k2 < 8; ++k2) {
        const Eigen::Matrix3cd a = green.operator_symbol({k0, k1, k2});
        CHECK((a - a.adjoint()).norm() <= 1e-13 * (1 + a.norm()));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(0.5 * (a + a.adjoint()));
        CHECK(es.eigenvalues().minCoeff() >= -1e-13);
        const Eigen::Matrix3cd b = green.operator_symbol({(8 - k0) % 8, (8 - k1) % 8, (8 - k2) % 8});
        CHECK((b - a.conjugate()).norm() <= 1e-13 * (1 + a.norm()));
        if (k0 <= 4 && (k0 | k1 | k2) != 0) {
          const Eigen::Matrix3cd gb = green.green_block({k0, k1, k2});
          CHECK((gb * a - Eigen::Matrix3cd::Identity()).norm() < 1e-10);
          CHECK((gb - gb.adjoint()).norm() <= 1e-13 * gb.norm());
        }
      }
}

TEST_CASE("preconditioner inverts the unit operator on mean-free fields") {
  check_round_trip(Grid::cube(8, 1.0), 1);
  check_round_trip(Grid({3, 5, 4}, {1.0, 2.0, 0.7}), 2);
  check_round_trip(Grid({6, 2, 7}, {3.0, 1.0, 2.0}), 3);
}

TEST_CASE("constant input is mapped to zero") {
  const Grid g = Grid::cube(6, 1.0);
  const GreenOperator green(g, build_topology());
  std::vector<double> f(3 * g.node_count()), z(f.size(), 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + double(i % 3);
  green.apply(f, z);
  CHECK(norm_span(z) < 1e-14);
}

TEST_CASE("preconditioner is self-adjoint and returns mean-free fields") {
  const Grid g({6, 5, 4}, {1.0, 1.0, 1.0});
  const GreenOperator green(g, build_topology());
  auto f = oracle::random_mean_free(g, 4);
  auto h = oracle::random_mean_free(g, 5);
  f[0] += 3.0;  // nonzero mean must not matter
  std::vector<double> zf(f.size()), zh(f.size());
  green.apply(f, zf);
  green.apply(h, zh);
  CHECK(dot_span(zf, h) == doctest::Approx(dot_span(f, zh)).epsilon(1e-12));
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::int64_t n = 0; n < g.node_count(); ++n) mean += zf[3 * n + c];
    CHECK(std::abs(mean) < 1e-12 * norm_span(zf));
  }
}

TEST_CASE("Fourier preconditioner equals the dense pseudo-inverse") {
  const Grid g = Grid::cube(4, 1.0);
  const Eigen::MatrixXd a = oracle::dense_unit_operator(g);
  const GreenOperator green(g, build_topology());
  const Eigen::MatrixXd pinv = a.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<double> e(a.rows(), 0.0), z(a.rows());
  double err = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    e[j] = 1.0;
    green.apply(e, z);
    for (Eigen::Index i = 0; i < a.rows(); ++i) err = std::max(err, std::abs(z[i] - pinv(i, j)));
    e[j] = 0.0;
  }
  CHECK(err <= 1e-12 * pinv.norm());
}
