#include "chtumor/io.hpp"

#include <fstream>
#include <stdexcept>

namespace chtumor {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(17);
  return os;
}

}  // namespace

void write_vtk(
    const std::string& path, const SimplicialMesh& mesh,
    const std::vector<std::pair<std::string, const Eigen::VectorXd*>>&
        point_data) {
  auto os = open_out(path);
  os << "# vtk DataFile Version 3.0\n";
  os << "chtumor snapshot\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices)
    os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  const int nvc = mesh.dim + 1;
  os << "CELLS " << mesh.num_cells() << ' '
     << mesh.num_cells() * (nvc + 1) << '\n';
  for (const auto& c : mesh.cells) {
    os << nvc;
    for (int i = 0; i < nvc; ++i) os << ' ' << c[i];
    os << '\n';
  }
  const int vtk_type = mesh.dim == 1 ? 3 : (mesh.dim == 2 ? 5 : 10);
  os << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (int c = 0; c < mesh.num_cells(); ++c) os << vtk_type << '\n';
  if (!point_data.empty()) {
    os << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& [name, values] : point_data) {
      os << "SCALARS " << name << " double 1\n";
      os << "LOOKUP_TABLE default\n";
      for (int p = 0; p < mesh.num_vertices(); ++p) os << (*values)[p] << '\n';
    }
  }
}

void write_field_csv(const std::string& path, const SimplicialMesh& mesh,
                     const Eigen::VectorXd& values) {
  auto os = open_out(path);
  os << "vertex";
  const char* axes[3] = {"x", "y", "z"};
  for (int k = 0; k < mesh.dim; ++k) os << ',' << axes[k];
  os << ",value\n";
  for (int p = 0; p < mesh.num_vertices(); ++p) {
    os << p;
    for (int k = 0; k < mesh.dim; ++k) os << ',' << mesh.vertices[p][k];
    os << ',' << values[p] << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  auto os = open_out(path);
  os << content;
}

}  // namespace chtumor
