#pragma once

// Raw field dumps: little-endian float64, x-fastest, node-major and
// component-minor, with a JSON descriptor next to the binary.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace xfft {

struct FieldDescriptor {
  std::string name;
  std::array<int, 3> dims{};
  int components = 1;
  std::string location = "node";  // node | voxel | frequency
  std::string units;
};

struct Field {
  FieldDescriptor descriptor;
  std::vector<double> data;
};

/// Writes <base>.bin and <base>.json.
void write_field(const std::filesystem::path& base, const FieldDescriptor& descriptor,
                 std::span<const double> data);
Field read_field(const std::filesystem::path& base);

/// Legacy-VTK export of a periodic cell: node vectors become point data on an
/// (N+1)^3 lattice with wrapped copies, voxel tensors become cell data.
struct VtkCellField {
  std::string name;
  int components = 6;
  std::span<const double> data;
};
void write_vtk(const std::filesystem::path& path, const std::array<int, 3>& dims,
               const std::array<double, 3>& spacing, std::span<const double> displacement,
               std::span<const VtkCellField> cell_fields);

}  // namespace xfft
