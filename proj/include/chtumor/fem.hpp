#ifndef CHTUMOR_FEM_HPP
#define CHTUMOR_FEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <optional>

#include "chtumor/mesh.hpp"

namespace chtumor {

using SparseMat = Eigen::SparseMatrix<double>;

/// Coefficient vector of a continuous piecewise-linear function.
struct NodalField {
  MeshPtr mesh;
  Eigen::VectorXd values;

  NodalField() = default;
  NodalField(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {}
  explicit NodalField(const MeshPtr& m)
      : mesh(m), values(Eigen::VectorXd::Zero(m->num_vertices())) {}
};

/// Diagonal of the lumped mass, plus boundary-lumped diagonals per marker.
struct LumpedMass {
  Eigen::VectorXd diagonal;           // sums to |Omega|
  Eigen::VectorXd boundary_all;       // sums to |dOmega|
  Eigen::VectorXd boundary_neumann;
  Eigen::VectorXd boundary_robin;

  const Eigen::VectorXd& boundary(BoundaryFilter f) const {
    switch (f) {
      case BoundaryFilter::All: return boundary_all;
      case BoundaryFilter::Neumann: return boundary_neumann;
      default: return boundary_robin;
    }
  }
};

/// Fixed quadrature on cells of a given dimension, exact at least for
/// polynomials of total degree 4. Points are stored in barycentric
/// coordinates; weights sum to 1 and are all positive.
struct SimplexQuadrature {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  static const SimplexQuadrature& get(int dim);
};

using ScalarFn = std::function<double(const std::array<double, 3>&)>;

/// P1 finite element machinery on one mesh: lumped (semi-)inner products,
/// stiffness forms with nodal-interpolated coefficients, interpolants,
/// the lumped projection and the discrete Neumann-Laplacian. All
/// operations are pure; the space caches mass, stiffness and patch data.
class P1Space {
public:
  explicit P1Space(MeshPtr mesh);

  const MeshPtr& mesh() const { return mesh_; }
  const SimplicialMesh& geom() const { return *mesh_; }
  int size() const { return mesh_->num_vertices(); }

  const LumpedMass& mass() const { return mass_; }
  const SparseMat& stiffness() const { return stiffness_; }
  const std::vector<std::vector<int>>& vertex_cells() const { return patches_; }

  NodalField field(double constant = 0.0) const;

  // --- lumped (semi-)inner products and norms ---
  double lumped_inner(const NodalField& u, const NodalField& v) const;
  double lumped_boundary_inner(const NodalField& u, const NodalField& v,
                               BoundaryFilter filter = BoundaryFilter::All) const;
  double norm_h(const NodalField& u) const;
  double norm_boundary_h(const NodalField& u,
                         BoundaryFilter filter = BoundaryFilter::All) const;
  double seminorm_H1(const NodalField& u) const;

  /// Stiffness with entry (p,q) = sum_K wbar_K int_K grad(l_p).grad(l_q),
  /// where wbar_K is the cell mean of the nodal weight; this integrates
  /// I_h[w] grad(u).grad(v) exactly. Weights must be strictly positive.
  SparseMat assemble_stiffness(const std::optional<NodalField>& weight) const;

  // --- interpolation and projection ---
  NodalField nodal_interpolate(const ScalarFn& f) const;
  /// Clement quasi-interpolant: at each vertex, the L2 projection of f onto
  /// linears over the vertex patch, evaluated at the vertex. Reproduces
  /// globally linear functions exactly.
  NodalField clement_interpolate(const ScalarFn& f) const;
  /// Lumped projection: value at p is (int f l_p) / m_p, so that
  /// <Qf, z>_h = (f, z)_L2 for all z in the space.
  NodalField lumped_projection(const ScalarFn& f) const;

  /// Discrete Neumann-Laplacian: -M^{-1} K q.
  NodalField discrete_laplacian(const NodalField& q) const;

  /// Evaluates the P1 function at an arbitrary point of the domain
  /// (point location by cell search; exact at vertices).
  double evaluate(const NodalField& u, const std::array<double, 3>& x) const;

  /// Sparse prolongation onto a finer space whose vertex set need not be
  /// nested; rows hold the barycentric weights of each target vertex.
  SparseMat prolongation_to(const P1Space& fine) const;

  /// Quadrature evaluation of int_Omega g(x) dx with the fixed cell rule.
  double integrate(const ScalarFn& g) const;

  void require_same_mesh(const NodalField& u) const;

private:
  MeshPtr mesh_;
  LumpedMass mass_;
  SparseMat stiffness_;
  std::vector<std::vector<int>> patches_;  // vertex -> owning cells

  int locate_cell(const std::array<double, 3>& x,
                  std::array<double, 4>& bary) const;
};

}  // namespace chtumor

#endif
