#include "xfft/field_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace xfft {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return base.string() + suffix;
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

void write_field(const std::filesystem::path& base, const FieldDescriptor& d, std::span<const double> data) {
  const std::size_t expected = std::size_t(d.dims[0]) * d.dims[1] * d.dims[2] * d.components;
  if (data.size() != expected) throw std::invalid_argument("write_field: data size does not match descriptor");

  std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + with_suffix(base, ".bin").string());
  std::vector<std::uint64_t> raw(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) raw[i] = to_little(std::bit_cast<std::uint64_t>(data[i]));
  bin.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size() * sizeof(std::uint64_t)));

  nlohmann::ordered_json j;
  j["name"] = d.name;
  j["dims"] = d.dims;
  j["components"] = d.components;
  j["location"] = d.location;
  j["dtype"] = "float64";
  j["endianness"] = "little";
  j["order"] = "x fastest, node-major, component-minor";
  j["units"] = d.units;
  j["binary"] = with_suffix(base, ".bin").filename().string();
  std::ofstream(with_suffix(base, ".json")) << j.dump(2) << "\n";
}

Field read_field(const std::filesystem::path& base) {
  std::ifstream js(with_suffix(base, ".json"));
  if (!js) throw std::runtime_error("cannot open " + with_suffix(base, ".json").string());
  const auto j = nlohmann::json::parse(js);
  Field f;
  f.descriptor.name = j.at("name").get<std::string>();
  f.descriptor.dims = j.at("dims").get<std::array<int, 3>>();
  f.descriptor.components = j.at("components").get<int>();
  f.descriptor.location = j.at("location").get<std::string>();
  f.descriptor.units = j.at("units").get<std::string>();
  if (j.at("dtype") != "float64" || j.at("endianness") != "little")
    throw std::runtime_error("read_field: unsupported encoding");

  const auto& d = f.descriptor;
  const std::size_t count = std::size_t(d.dims[0]) * d.dims[1] * d.dims[2] * d.components;
  std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + with_suffix(base, ".bin").string());
  std::vector<std::uint64_t> raw(count);
  bin.read(reinterpret_cast<char*>(raw.data()), std::streamsize(count * sizeof(std::uint64_t)));
  if (std::size_t(bin.gcount()) != count * sizeof(std::uint64_t))
    throw std::runtime_error("read_field: binary file is truncated");
  f.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.data[i] = std::bit_cast<double>(to_little(raw[i]));
  return f;
}

void write_vtk(const std::filesystem::path& path, const std::array<int, 3>& dims,
               const std::array<double, 3>& spacing, std::span<const double> displacement,
               std::span<const VtkCellField> cell_fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.precision(17);
  const int p0 = dims[0] + 1, p1 = dims[1] + 1, p2 = dims[2] + 1;
  out << "# vtk DataFile Version 3.0\nperiodic cell\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << p0 << " " << p1 << " " << p2 << "\n";
  out << "ORIGIN 0 0 0\nSPACING " << spacing[0] << " " << spacing[1] << " " << spacing[2] << "\n";
  if (!displacement.empty()) {
    out << "POINT_DATA " << std::int64_t(p0) * p1 * p2 << "\nVECTORS displacement double\n";
    for (int k = 0; k < p2; ++k)
      for (int j = 0; j < p1; ++j)
        for (int i = 0; i < p0; ++i) {
          const std::int64_t node =
              (i % dims[0]) + std::int64_t(dims[0]) * ((j % dims[1]) + std::int64_t(dims[1]) * (k % dims[2]));
          out << displacement[3 * node] << " " << displacement[3 * node + 1] << " " << displacement[3 * node + 2]
              << "\n";
        }
  }
  if (!cell_fields.empty()) {
    const std::int64_t cells = std::int64_t(dims[0]) * dims[1] * dims[2];
    out << "CELL_DATA " << cells << "\nFIELD cell_fields " << cell_fields.size() << "\n";
    for (const auto& f : cell_fields) {
      out << f.name << " " << f.components << " " << cells << " double\n";
      for (std::int64_t c = 0; c < cells; ++c) {
        for (int k = 0; k < f.components; ++k) out << f.data[c * f.components + k] << (k + 1 < f.components ? " " : "\n");
      }
    }
  }
}

}  // namespace xfft
