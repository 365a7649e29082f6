#include "xfft/voigt.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <stdexcept>
#include <string>

namespace xfft {

namespace {

double mandel_factor(int i, int j) { return i == j ? 1.0 : kSqrt2; }

}  // namespace

Vec6 to_mandel(const Mat3& t) {
  Vec6 v;
  v << t(0, 0), t(1, 1), t(2, 2), kSqrt2 * t(1, 2), kSqrt2 * t(0, 2), kSqrt2 * t(0, 1);
  return v;
}

Mat3 from_mandel(const Vec6& v) {
  Mat3 t;
  const double s = 1.0 / kSqrt2;
  t << v(0), s * v(5), s * v(4),  //
      s * v(5), v(1), s * v(3),   //
      s * v(4), s * v(3), v(2);
  return t;
}

void MaterialIso::validate() const {
  if (!(young > 0.0)) {
    throw std::invalid_argument("Young's modulus must be positive, got " + std::to_string(young));
  }
  if (!(poisson > -1.0 && poisson < 0.5)) {
    throw std::invalid_argument("Poisson's ratio must lie in (-1, 0.5), got " +
                                std::to_string(poisson));
  }
}

double MaterialIso::bulk_modulus() const { return young / (3.0 * (1.0 - 2.0 * poisson)); }

double MaterialIso::shear_modulus() const { return young / (2.0 * (1.0 + poisson)); }

double MaterialIso::lame_lambda() const {
  return young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
}

MaterialIso material_from_bulk_shear(double bulk, double shear) {
  MaterialIso m;
  m.young = 9.0 * bulk * shear / (3.0 * bulk + shear);
  m.poisson = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear));
  m.validate();
  return m;
}

Stiffness66 iso_stiffness(const MaterialIso& m) {
  m.validate();
  const double mu = m.shear_modulus();
  const double lambda = m.lame_lambda();
  Stiffness66 c = 2.0 * mu * Stiffness66::Identity();
  c.topLeftCorner<3, 3>().array() += lambda;
  return c;
}

StiffnessBounds stiffness_bounds(std::span<const Stiffness66> phases) {
  if (phases.empty()) throw std::invalid_argument("stiffness_bounds: no phases");
  StiffnessBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& c : phases) {
    if ((c - c.transpose()).norm() > 1e-12 * c.norm()) {
      throw std::invalid_argument("stiffness_bounds: stiffness is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Stiffness66> es(c, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (!(ev(0) > 0.0)) {
      throw std::invalid_argument("stiffness_bounds: stiffness is not positive definite");
    }
    b.lower = std::min(b.lower, ev(0));
    b.upper = std::max(b.upper, ev(5));
  }
  return b;
}

double contract_full(const Mat3& eps, const Stiffness66& c) {
  // C_ijkl = C_mandel(I, J) / (f_ij f_kl)
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double cijkl = c(mandel_index(i, j), mandel_index(k, l)) /
                               (mandel_factor(i, j) * mandel_factor(k, l));
          sum += eps(i, j) * cijkl * eps(k, l);
        }
  return sum;
}

}  // namespace xfft
