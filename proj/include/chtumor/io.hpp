#ifndef CHTUMOR_IO_HPP
#define CHTUMOR_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "chtumor/fem.hpp"

namespace chtumor {

/// Legacy VTK ASCII unstructured-grid snapshot with the given point-data
/// scalar fields.
void write_vtk(const std::string& path, const SimplicialMesh& mesh,
               const std::vector<std::pair<std::string, const Eigen::VectorXd*>>&
                   point_data);

/// Flat CSV field dump: vertex index, coordinates, value.
void write_field_csv(const std::string& path, const SimplicialMesh& mesh,
                     const Eigen::VectorXd& values);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace chtumor

#endif
