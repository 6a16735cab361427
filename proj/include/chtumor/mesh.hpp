#ifndef CHTUMOR_MESH_HPP
#define CHTUMOR_MESH_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace chtumor {

enum class BoundaryMarker { Neumann, Robin };

/// Filter for boundary integrals and boundary lumped masses.
enum class BoundaryFilter { All, Neumann, Robin };

struct BoundaryFacet {
  std::array<int, 3> v{-1, -1, -1};  // dim vertices used
  BoundaryMarker marker = BoundaryMarker::Robin;
};

/// Set of cell indices scheduled for refinement.
struct CellMarkSet {
  std::set<int> marked;
};

/// Conforming simplicial mesh in dimension 1, 2 or 3 with marked boundary
/// facets. Immutable after construction: refinement returns a new mesh.
class SimplicialMesh {
public:
  int dim = 1;
  std::vector<std::array<double, 3>> vertices;  // trailing coords zero
  std::vector<std::array<int, 4>> cells;        // dim+1 entries used
  std::vector<BoundaryFacet> boundary_facets;
  double h_max = 0.0;
  double h_min = 0.0;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  double cell_volume(int c) const { return volumes_[c]; }
  double cell_diameter(int c) const { return diameters_[c]; }
  double total_volume() const { return total_volume_; }

  /// Gradient of the local P1 basis function of vertex slot i on cell c.
  const std::array<double, 3>& basis_gradient(int c, int i) const {
    return gradients_[static_cast<std::size_t>(c) * 4 + i];
  }

  double facet_measure(const BoundaryFacet& f) const;

  /// True when vertex p lies on at least one boundary facet.
  bool is_boundary_vertex(int p) const { return on_boundary_[p]; }

  /// Orients cells positively, checks conformity and the boundary facet
  /// list, and computes cached geometry. Builders call this; custom meshes
  /// assembled by hand must call it before use.
  void finalize();

private:
  std::vector<double> volumes_;
  std::vector<double> diameters_;
  std::vector<std::array<double, 3>> gradients_;  // 4 slots per cell
  std::vector<bool> on_boundary_;
  double total_volume_ = 0.0;
};

using MeshPtr = std::shared_ptr<const SimplicialMesh>;

/// Uniform partition of [a,b] into n_cells intervals. Both endpoint facets
/// are marked Robin unless another marker is requested.
MeshPtr build_interval_mesh(double a, double b, int n_cells,
                            BoundaryMarker marker = BoundaryMarker::Robin);

/// Assigns a marker to a boundary facet from its midpoint coordinates.
using MarkerRule = std::function<BoundaryMarker(const std::array<double, 3>&)>;

/// Structured right-triangle mesh of [x0,x1] x [y0,y1] with nx*ny rectangles,
/// each split along the diagonal. Every triangle is right isosceles, hence
/// non-obtuse. The marker rule defaults to Robin everywhere.
MeshPtr build_rect_mesh(double x0, double y0, double x1, double y1, int nx,
                        int ny, const MarkerRule& rule = {});

/// Marker rule for the quarter-domain symmetry reduction: Neumann on the
/// sides touching x=x0 or y=y0, Robin on the outer sides.
MarkerRule symmetric_quarter_rule(double x0, double y0);

/// Structured Kuhn (six tetrahedra per cube) mesh of a box. Optional 3D
/// support; refinement of such meshes is uniform only.
MeshPtr build_box_mesh(const std::array<double, 3>& lo,
                       const std::array<double, 3>& hi, int nx, int ny, int nz,
                       const MarkerRule& rule = {});

/// Result of a refinement pass. Old vertices keep their indices; every new
/// vertex is the midpoint of the recorded parent edge, so P1 data transfers
/// exactly by averaging the two parent values.
struct RefinementResult {
  MeshPtr mesh;
  std::vector<std::array<int, 2>> midpoint_parents;  // one per new vertex
};

/// Regular (red) refinement of the marked cells with conforming closure.
/// In 2D a cell with a single hanging midpoint on its longest edge is
/// bisected (green); hanging midpoints elsewhere force red refinement of the
/// neighbour, so right-isosceles meshes stay right-isosceles. In 3D marking
/// any cell refines all cells (Bey subdivision, uniform only).
RefinementResult refine(const MeshPtr& mesh, const CellMarkSet& marks);

/// Marks every cell owning a vertex p with |phi_p| < threshold.
CellMarkSet mark_interface(const SimplicialMesh& mesh,
                           const std::vector<double>& phi_values,
                           double threshold = 0.95);

struct NonObtuseReport {
  bool all_non_obtuse = true;
  double worst_cos = 1.0;  // smallest cosine over all (dihedral) angles
  int worst_cell = -1;
  std::vector<std::pair<int, double>> offenders;  // cell, cos of worst angle
};

/// Checks that no simplex has an (dihedral) angle beyond 90 degrees;
/// cos(angle) >= -1e-12 counts as non-obtuse.
NonObtuseReport check_non_obtuse(const SimplicialMesh& mesh);

}  // namespace chtumor

#endif
