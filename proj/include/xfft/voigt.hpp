#pragma once

// Mandel-notation tensor algebra for symmetric second- and fourth-order
// tensors. Component order is (11, 22, 33, 23, 13, 12); the three shear
// components carry a factor sqrt(2) so that tensor contractions become plain
// dot products and Frobenius norms equal Euclidean norms.

#include <Eigen/Dense>

#include <span>

namespace xfft {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

using Strain6 = Vec6;
using Stress6 = Vec6;
using Stiffness66 = Mat6;

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Mandel index of the symmetric pair (i, j).
constexpr int mandel_index(int i, int j) {
  if (i == j) return i;
  return 6 - i - j;  // (1,2)->3, (0,2)->4, (0,1)->5
}

Vec6 to_mandel(const Mat3& tensor);
Mat3 from_mandel(const Vec6& v);

/// Isotropic linear-elastic material given by Young's modulus (MPa) and
/// Poisson's ratio.
struct MaterialIso {
  double young = 1.0;
  double poisson = 0.0;

  /// Throws std::invalid_argument outside young > 0, -1 < poisson < 0.5.
  void validate() const;
  double bulk_modulus() const;
  double shear_modulus() const;
  double lame_lambda() const;
};

MaterialIso material_from_bulk_shear(double bulk, double shear);

/// C = 2 mu I_sym + lambda 1 (x) 1 in Mandel form.
Stiffness66 iso_stiffness(const MaterialIso& m);

struct StiffnessBounds {
  double lower = 0.0;  // C_-
  double upper = 0.0;  // C_+
};

/// Smallest and largest eigenvalue over all phases. Rejects empty input and
/// matrices that are not symmetric positive definite.
StiffnessBounds stiffness_bounds(std::span<const Stiffness66> phases);

/// Full fourth-order contraction eps : C : eps with C given by its Mandel
/// matrix, evaluated component-wise on 3x3 tensors. Used as an independent
/// check of the Mandel shortcut.
double contract_full(const Mat3& eps, const Stiffness66& c);

}  // namespace xfft
