#pragma once

// Run orchestration behind the command-line subcommands.

#include "xfft/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xfft {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitNotConverged = 3;

struct Overrides {
  std::optional<double> tol;
  std::optional<Scheme> scheme;
};
void apply_overrides(SolverConfig& config, const Overrides& overrides);

int run_solve(const RunConfig& config, const std::filesystem::path& out, std::ostream& os);
int run_sweep(const RunConfig& config, const std::filesystem::path& out, std::ostream& os);
int run_symbol_dump(const Grid& grid, const std::filesystem::path& out, std::ostream& os);

struct ValidationReport {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> metrics;
  std::string detail;
};

/// Single phase: <sigma> = C ebar with no iteration and C_eff = C.
ValidationReport validate_homogeneous(int n, const SolverConfig& config);
/// Two-phase layered cell normal to x against the closed-form laminate. With
/// `mid_voxel` the interfaces sit halfway between node planes (enriched),
/// otherwise on node planes.
ValidationReport validate_laminate(int n, const SolverConfig& config, bool mid_voxel);
/// Neutral coated sphere: effective bulk modulus and lcg iteration count.
ValidationReport validate_hashin(int n, const SolverConfig& config);

std::string format_report(const ValidationReport& report);

/// Writes the per-iteration log as CSV.
void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

}  // namespace xfft
