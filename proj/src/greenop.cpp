#include "xfft/greenop.hpp"

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace xfft {

namespace {

int stencil_slot(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void init_fftw_threads() {
  static std::once_flag once;
  std::call_once(once, [] { fftw_init_threads(); });
}

}  // namespace

Stencil stencil_from_voxel(const Mat24& k) {
  Stencil s;
  for (auto& m : s) m.setZero();
  for (int p = 0; p < 8; ++p) {
    for (int q = 0; q < 8; ++q) {
      const int dx = (q & 1) - (p & 1);
      const int dy = ((q >> 1) & 1) - ((p >> 1) & 1);
      const int dz = ((q >> 2) & 1) - ((p >> 2) & 1);
      s[stencil_slot(dx, dy, dz)] += k.block<3, 3>(3 * p, 3 * q);
    }
  }
  return s;
}

Mat24 unit_voxel_matrix(const Grid& grid, const ElementTopology& topo) {
  Mat24 k = Mat24::Zero();
  const Vec3 h = grid.spacing_vec();
  for (int t = 0; t < 6; ++t) {
    const auto m = assemble_plain(topo.tet_vertices(t, Vec3::Zero(), h), Mat6::Identity());
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        k.block<3, 3>(3 * topo.corners[t][a], 3 * topo.corners[t][b]) +=
            m.stiffness.block<3, 3>(3 * a, 3 * b);
  }
  return k;
}

void apply_stencil(const Grid& grid, const Stencil& stencil, std::span<const double> in,
                   std::span<double> out) {
  const auto& n = grid.n;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n[2]; ++k) {
    for (int j = 0; j < n[1]; ++j) {
      for (int i = 0; i < n[0]; ++i) {
        Vec3 acc = Vec3::Zero();
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const auto m = grid.node_index(i + dx, j + dy, k + dz);
              acc += stencil[stencil_slot(dx, dy, dz)] * Vec3(in[3 * m], in[3 * m + 1], in[3 * m + 2]);
            }
        const auto node = grid.node_index(i, j, k);
        for (int c = 0; c < 3; ++c) out[3 * node + c] = acc(c);
      }
    }
  }
}

struct GreenOperator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;

  ~Plans() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

GreenOperator::GreenOperator(const Grid& grid, const ElementTopology& topo)
    : grid_(grid), stencil_(stencil_from_voxel(unit_voxel_matrix(grid, topo))) {
  const auto dims = half_dims();
  green_.assign(9 * half_size(), 0.0);
  for (int k2 = 0; k2 < dims[2]; ++k2) {
    for (int k1 = 0; k1 < dims[1]; ++k1) {
      for (int k0 = 0; k0 < dims[0]; ++k0) {
        const std::int64_t idx = k0 + std::int64_t(dims[0]) * (k1 + std::int64_t(dims[1]) * k2);
        double* g = &green_[9 * idx];
        if (k0 == 0 && k1 == 0 && k2 == 0) continue;  // mean-free projection
        const Eigen::Matrix3cd a = operator_symbol({k0, k1, k2});
        Eigen::Matrix3cd inv = a.inverse();
        inv = 0.5 * (inv + inv.adjoint()).eval();
        const double scale = std::abs(a.trace().real());
        if (!std::isfinite(inv.norm()) || std::abs(a.determinant()) <= 1e-14 * scale * scale * scale) {
          throw std::runtime_error("constant-coefficient operator singular at nonzero frequency");
        }
        g[0] = inv(0, 0).real();
        g[1] = inv(1, 1).real();
        g[2] = inv(2, 2).real();
        g[3] = inv(0, 1).real();
        g[4] = inv(0, 1).imag();
        g[5] = inv(0, 2).real();
        g[6] = inv(0, 2).imag();
        g[7] = inv(1, 2).real();
        g[8] = inv(1, 2).imag();
      }
    }
  }

  init_fftw_threads();
  plans_ = std::make_unique<Plans>();
  const std::int64_t nodes = grid_.node_count();
  plans_->real = fftw_alloc_real(3 * nodes);
  plans_->spectrum = fftw_alloc_complex(3 * half_size());
  const int shape[3] = {grid_.n[2], grid_.n[1], grid_.n[0]};
  std::lock_guard lock(fftw_planner_mutex());
  fftw_plan_with_nthreads(omp_get_max_threads());
  plans_->forward = fftw_plan_many_dft_r2c(3, shape, 3, plans_->real, nullptr, 3, 1,
                                           plans_->spectrum, nullptr, 3, 1, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_many_dft_c2r(3, shape, 3, plans_->spectrum, nullptr, 3, 1,
                                            plans_->real, nullptr, 3, 1, FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward) throw std::runtime_error("FFTW planning failed");
}

GreenOperator::~GreenOperator() = default;

Eigen::Matrix3cd GreenOperator::operator_symbol(const std::array<int, 3>& k) const {
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const double phase = two_pi * (double(k[0]) * dx / grid_.n[0] + double(k[1]) * dy / grid_.n[1] +
                                       double(k[2]) * dz / grid_.n[2]);
        a += stencil_[stencil_slot(dx, dy, dz)].cast<std::complex<double>>() *
             std::complex<double>(std::cos(phase), std::sin(phase));
      }
  return a;
}

Eigen::Matrix3cd GreenOperator::green_block(const std::array<int, 3>& k) const {
  const auto dims = half_dims();
  const std::int64_t idx = k[0] + std::int64_t(dims[0]) * (k[1] + std::int64_t(dims[1]) * k[2]);
  const double* g = &green_[9 * idx];
  using C = std::complex<double>;
  Eigen::Matrix3cd m;
  m(0, 0) = g[0];
  m(1, 1) = g[1];
  m(2, 2) = g[2];
  m(0, 1) = C(g[3], g[4]);
  m(0, 2) = C(g[5], g[6]);
  m(1, 2) = C(g[7], g[8]);
  m(1, 0) = std::conj(m(0, 1));
  m(2, 0) = std::conj(m(0, 2));
  m(2, 1) = std::conj(m(1, 2));
  return m;
}

void GreenOperator::apply(std::span<const double> f, std::span<double> z) const {
  const std::int64_t nodes = grid_.node_count();
  if (std::int64_t(f.size()) < 3 * nodes || std::int64_t(z.size()) < 3 * nodes) {
    throw std::invalid_argument("GreenOperator::apply: field size mismatch");
  }
  std::memcpy(plans_->real, f.data(), sizeof(double) * 3 * nodes);
  fftw_execute(plans_->forward);

  const std::int64_t freqs = half_size();
  fftw_complex* s = plans_->spectrum;
  const double norm = 1.0 / double(nodes);
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < freqs; ++idx) {
    const double* g = &green_[9 * idx];
    using C = std::complex<double>;
    const C u0(s[3 * idx][0], s[3 * idx][1]);
    const C u1(s[3 * idx + 1][0], s[3 * idx + 1][1]);
    const C u2(s[3 * idx + 2][0], s[3 * idx + 2][1]);
    const C g01(g[3], g[4]), g02(g[5], g[6]), g12(g[7], g[8]);
    const C r0 = g[0] * u0 + g01 * u1 + g02 * u2;
    const C r1 = std::conj(g01) * u0 + g[1] * u1 + g12 * u2;
    const C r2 = std::conj(g02) * u0 + std::conj(g12) * u1 + g[2] * u2;
    s[3 * idx][0] = norm * r0.real();
    s[3 * idx][1] = norm * r0.imag();
    s[3 * idx + 1][0] = norm * r1.real();
    s[3 * idx + 1][1] = norm * r1.imag();
    s[3 * idx + 2][0] = norm * r2.real();
    s[3 * idx + 2][1] = norm * r2.imag();
  }
  fftw_execute(plans_->backward);
  std::memcpy(z.data(), plans_->real, sizeof(double) * 3 * nodes);
}

}  // namespace xfft
