#pragma once

// FFT-diagonalized inverse of the constant-coefficient operator
//   (A0 v)_i = int grad^s N_i : grad^s v dx
// on the periodic P1 grid. A0 is translation invariant because every voxel
// uses the same six-tet split, so its 27-point stencil diagonalizes under the
// discrete Fourier transform into one 3x3 Hermitian block per frequency.

#include "xfft/element.hpp"
#include "xfft/mesh.hpp"

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace xfft {

/// 3x3 blocks of the 27-point stencil, indexed by offset (dx+1) + 3 (dy+1) + 9 (dz+1).
using Stencil = std::array<Mat3, 27>;

/// Stencil of the voxel operator `voxel_matrix` (24x24, corner-major).
Stencil stencil_from_voxel(const Mat24& voxel_matrix);

/// Voxel matrix of the unit-coefficient (Mandel identity) operator.
Mat24 unit_voxel_matrix(const Grid& grid, const ElementTopology& topo);

/// Real-space application of a stencil to a nodal 3-vector field.
void apply_stencil(const Grid& grid, const Stencil& stencil, std::span<const double> in,
                   std::span<double> out);

class GreenOperator {
 public:
  GreenOperator(const Grid& grid, const ElementTopology& topo);
  ~GreenOperator();
  GreenOperator(const GreenOperator&) = delete;
  GreenOperator& operator=(const GreenOperator&) = delete;

  /// z = A0^+ f on the FE block. The output is mean free.
  void apply(std::span<const double> f, std::span<double> z) const;

  /// Symbol of A0 (not inverted) at integer frequency k.
  Eigen::Matrix3cd operator_symbol(const std::array<int, 3>& k) const;
  /// Stored inverse block at half-spectrum frequency k (k[0] <= N1/2).
  Eigen::Matrix3cd green_block(const std::array<int, 3>& k) const;

  const Stencil& stencil() const { return stencil_; }
  const Grid& grid() const { return grid_; }
  std::array<int, 3> half_dims() const { return {grid_.n[0] / 2 + 1, grid_.n[1], grid_.n[2]}; }
  std::int64_t half_size() const {
    return std::int64_t(grid_.n[0] / 2 + 1) * grid_.n[1] * grid_.n[2];
  }

  /// Writes the stored symbol (9 doubles per frequency: three real diagonal
  /// entries, then re/im of (0,1), (0,2), (1,2)) for inspection.
  std::vector<double> packed_symbol() const { return green_; }

 private:
  struct Plans;
  Grid grid_;
  Stencil stencil_;
  std::vector<double> green_;  // packed Hermitian inverse blocks
  std::unique_ptr<Plans> plans_;
};

}  // namespace xfft
