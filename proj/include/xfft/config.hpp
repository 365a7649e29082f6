#pragma once

// JSON run configuration. Every object rejects unknown keys; errors carry the
// line of the offending entry.

#include "xfft/homogenize.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xfft {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class SweepMetric { Bulk, Energy, StressComponent };

struct OutputOptions {
  bool fields = false;
  bool vtk = false;
  bool log = true;
  std::vector<int> study_ns;
  SweepMetric metric = SweepMetric::Bulk;
  int stress_component = 0;
  std::optional<double> reference;
};

struct RunConfig {
  Grid grid;
  PhaseAssembly assembly;
  DiscretizationOptions discretization;
  Strain6 loading = Strain6::Zero();
  SolverConfig solver;
  OutputOptions outputs;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace xfft
