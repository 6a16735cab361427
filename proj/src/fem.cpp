#include "chtumor/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace chtumor {

namespace {

// Gauss-Legendre nodes/weights on [0,1].
struct GL {
  std::vector<double> x, w;
};

GL gauss_legendre(int n) {
  GL gl;
  if (n == 3) {
    const double s = std::sqrt(3.0 / 5.0);
    gl.x = {0.5 * (1 - s), 0.5, 0.5 * (1 + s)};
    gl.w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  } else if (n == 4) {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
    gl.x = {0.5 * (1 - b), 0.5 * (1 - a), 0.5 * (1 + a), 0.5 * (1 + b)};
    gl.w = {wb, wa, wa, wb};
  } else {
    throw std::logic_error("gauss_legendre: unsupported order");
  }
  return gl;
}

// Collapsed-coordinate (Duffy) product rules on the reference simplex,
// normalized so the weights sum to 1.
SimplexQuadrature make_rule(int dim) {
  SimplexQuadrature q;
  if (dim == 1) {
    GL g = gauss_legendre(3);
    for (int i = 0; i < 3; ++i) {
      q.points.push_back({1.0 - g.x[i], g.x[i], 0.0, 0.0});
      q.weights.push_back(g.w[i]);
    }
  } else if (dim == 2) {
    GL g = gauss_legendre(3);
    double total = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double u = g.x[i], v = g.x[j];
        double x = u, y = v * (1.0 - u);
        double w = g.w[i] * g.w[j] * (1.0 - u);
        q.points.push_back({1.0 - x - y, x, y, 0.0});
        q.weights.push_back(w);
        total += w;
      }
    for (auto& w : q.weights) w /= total;
  } else {
    GL g = gauss_legendre(4);
    double total = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          double u = g.x[i], v = g.x[j], w3 = g.x[k];
          double x = u, y = v * (1.0 - u), z = w3 * (1.0 - u) * (1.0 - v);
          double w = g.w[i] * g.w[j] * g.w[k] * (1.0 - u) * (1.0 - u) *
                     (1.0 - v);
          q.points.push_back({1.0 - x - y - z, x, y, z});
          q.weights.push_back(w);
          total += w;
        }
    for (auto& w : q.weights) w /= total;
  }
  return q;
}

}  // namespace

const SimplexQuadrature& SimplexQuadrature::get(int dim) {
  static const SimplexQuadrature q1 = make_rule(1);
  static const SimplexQuadrature q2 = make_rule(2);
  static const SimplexQuadrature q3 = make_rule(3);
  switch (dim) {
    case 1: return q1;
    case 2: return q2;
    default: return q3;
  }
}

P1Space::P1Space(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const auto& m = *mesh_;
  const int n = m.num_vertices();
  const int nvc = m.dim + 1;

  mass_.diagonal = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < m.num_cells(); ++c) {
    double share = m.cell_volume(c) / nvc;
    for (int i = 0; i < nvc; ++i) mass_.diagonal[m.cells[c][i]] += share;
  }
  mass_.boundary_all = Eigen::VectorXd::Zero(n);
  mass_.boundary_neumann = Eigen::VectorXd::Zero(n);
  mass_.boundary_robin = Eigen::VectorXd::Zero(n);
  for (const auto& bf : m.boundary_facets) {
    double share = m.facet_measure(bf) / std::max(m.dim, 1);
    for (int i = 0; i < m.dim; ++i) {
      mass_.boundary_all[bf.v[i]] += share;
      if (bf.marker == BoundaryMarker::Neumann)
        mass_.boundary_neumann[bf.v[i]] += share;
      else
        mass_.boundary_robin[bf.v[i]] += share;
    }
  }

  stiffness_ = assemble_stiffness(std::nullopt);

  patches_.assign(n, {});
  for (int c = 0; c < m.num_cells(); ++c)
    for (int i = 0; i < nvc; ++i) patches_[m.cells[c][i]].push_back(c);
}

NodalField P1Space::field(double constant) const {
  NodalField f(mesh_);
  f.values.setConstant(constant);
  return f;
}

void P1Space::require_same_mesh(const NodalField& u) const {
  if (u.mesh.get() != mesh_.get())
    throw std::invalid_argument("fem: field lives on a different mesh");
  if (u.values.size() != size())
    throw std::invalid_argument("fem: field size mismatch");
}

double P1Space::lumped_inner(const NodalField& u, const NodalField& v) const {
  require_same_mesh(u);
  require_same_mesh(v);
  return (mass_.diagonal.array() * u.values.array() * v.values.array()).sum();
}

double P1Space::lumped_boundary_inner(const NodalField& u, const NodalField& v,
                                      BoundaryFilter filter) const {
  require_same_mesh(u);
  require_same_mesh(v);
  return (mass_.boundary(filter).array() * u.values.array() * v.values.array())
      .sum();
}

double P1Space::norm_h(const NodalField& u) const {
  return std::sqrt(std::max(0.0, lumped_inner(u, u)));
}

double P1Space::norm_boundary_h(const NodalField& u,
                                BoundaryFilter filter) const {
  return std::sqrt(std::max(0.0, lumped_boundary_inner(u, u, filter)));
}

double P1Space::seminorm_H1(const NodalField& u) const {
  require_same_mesh(u);
  return std::sqrt(std::max(0.0, u.values.dot(stiffness_ * u.values)));
}

SparseMat P1Space::assemble_stiffness(
    const std::optional<NodalField>& weight) const {
  const auto& m = *mesh_;
  const int nvc = m.dim + 1;
  if (weight) {
    require_same_mesh(*weight);
    if ((weight->values.array() <= 0.0).any())
      throw std::invalid_argument(
          "assemble_stiffness: weight must be strictly positive");
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m.num_cells()) * nvc * nvc);
  for (int c = 0; c < m.num_cells(); ++c) {
    double wbar = 1.0;
    if (weight) {
      wbar = 0.0;
      for (int i = 0; i < nvc; ++i) wbar += weight->values[m.cells[c][i]];
      wbar /= nvc;
    }
    double scale = wbar * m.cell_volume(c);
    for (int i = 0; i < nvc; ++i)
      for (int j = 0; j < nvc; ++j) {
        const auto& gi = m.basis_gradient(c, i);
        const auto& gj = m.basis_gradient(c, j);
        double dot = 0.0;
        for (int k = 0; k < m.dim; ++k) dot += gi[k] * gj[k];
        trips.emplace_back(m.cells[c][i], m.cells[c][j], scale * dot);
      }
  }
  SparseMat K(size(), size());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

NodalField P1Space::nodal_interpolate(const ScalarFn& f) const {
  NodalField out(mesh_);
  for (int p = 0; p < size(); ++p) out.values[p] = f(mesh_->vertices[p]);
  return out;
}

NodalField P1Space::clement_interpolate(const ScalarFn& f) const {
  const auto& m = *mesh_;
  const int d = m.dim;
  const auto& quad = SimplexQuadrature::get(d);
  NodalField out(mesh_);
  for (int p = 0; p < size(); ++p) {
    // local basis {1, (x - P_p)/diam} keeps the patch Gram well conditioned
    const auto& xp = m.vertices[p];
    double diam = 0.0;
    for (int c : patches_[p]) diam = std::max(diam, m.cell_diameter(c));
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
    for (int c : patches_[p]) {
      double vol = m.cell_volume(c);
      for (std::size_t q = 0; q < quad.points.size(); ++q) {
        std::array<double, 3> x{0, 0, 0};
        for (int i = 0; i <= d; ++i)
          for (int k = 0; k < d; ++k)
            x[k] += quad.points[q][i] * m.vertices[m.cells[c][i]][k];
        Eigen::VectorXd b(d + 1);
        b[0] = 1.0;
        for (int k = 0; k < d; ++k) b[k + 1] = (x[k] - xp[k]) / diam;
        double w = quad.weights[q] * vol;
        G += w * b * b.transpose();
        rhs += w * f(x) * b;
      }
    }
    Eigen::VectorXd coef = G.ldlt().solve(rhs);
    out.values[p] = coef[0];  // local basis vanishes at P_p except constant
  }
  return out;
}

NodalField P1Space::lumped_projection(const ScalarFn& f) const {
  const auto& m = *mesh_;
  const int d = m.dim;
  const auto& quad = SimplexQuadrature::get(d);
  NodalField out(mesh_);
  for (int c = 0; c < m.num_cells(); ++c) {
    double vol = m.cell_volume(c);
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      std::array<double, 3> x{0, 0, 0};
      for (int i = 0; i <= d; ++i)
        for (int k = 0; k < d; ++k)
          x[k] += quad.points[q][i] * m.vertices[m.cells[c][i]][k];
      double fw = f(x) * quad.weights[q] * vol;
      for (int i = 0; i <= d; ++i)
        out.values[m.cells[c][i]] += fw * quad.points[q][i];
    }
  }
  out.values.array() /= mass_.diagonal.array();
  return out;
}

NodalField P1Space::discrete_laplacian(const NodalField& q) const {
  require_same_mesh(q);
  NodalField out(mesh_);
  out.values = -(stiffness_ * q.values).array() / mass_.diagonal.array();
  return out;
}

double P1Space::integrate(const ScalarFn& g) const {
  const auto& m = *mesh_;
  const int d = m.dim;
  const auto& quad = SimplexQuadrature::get(d);
  double total = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    double vol = m.cell_volume(c);
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      std::array<double, 3> x{0, 0, 0};
      for (int i = 0; i <= d; ++i)
        for (int k = 0; k < d; ++k)
          x[k] += quad.points[q][i] * m.vertices[m.cells[c][i]][k];
      total += g(x) * quad.weights[q] * vol;
    }
  }
  return total;
}

int P1Space::locate_cell(const std::array<double, 3>& x,
                         std::array<double, 4>& bary) const {
  const auto& m = *mesh_;
  const int d = m.dim;
  const double tol = 1e-10;
  int best = -1;
  double best_violation = std::numeric_limits<double>::max();
  for (int c = 0; c < m.num_cells(); ++c) {
    // barycentric coordinates from the cached basis gradients:
    // l_i(x) = l_i(P_0) + grad(l_i).(x - P_0)
    const auto& p0 = m.vertices[m.cells[c][0]];
    std::array<double, 4> lam{0, 0, 0, 0};
    double violation = 0.0;
    for (int i = 0; i <= d; ++i) {
      double v = (i == 0) ? 1.0 : 0.0;
      const auto& g = m.basis_gradient(c, i);
      for (int k = 0; k < d; ++k) v += g[k] * (x[k] - p0[k]);
      lam[i] = v;
      violation = std::max(violation, -v);
    }
    if (violation <= tol) {
      bary = lam;
      return c;
    }
    if (violation < best_violation) {
      best_violation = violation;
      best = c;
      bary = lam;
    }
  }
  if (best >= 0 && best_violation <= 1e-6) return best;  // boundary roundoff
  throw std::invalid_argument("fem: point outside the mesh");
}

double P1Space::evaluate(const NodalField& u,
                         const std::array<double, 3>& x) const {
  require_same_mesh(u);
  std::array<double, 4> bary{};
  int c = locate_cell(x, bary);
  double v = 0.0;
  for (int i = 0; i <= mesh_->dim; ++i)
    v += bary[i] * u.values[mesh_->cells[c][i]];
  return v;
}

SparseMat P1Space::prolongation_to(const P1Space& fine) const {
  const auto& mf = fine.geom();
  std::vector<Eigen::Triplet<double>> trips;
  for (int p = 0; p < fine.size(); ++p) {
    std::array<double, 4> bary{};
    int c = locate_cell(mf.vertices[p], bary);
    for (int i = 0; i <= mesh_->dim; ++i)
      if (std::abs(bary[i]) > 1e-14)
        trips.emplace_back(p, mesh_->cells[c][i], bary[i]);
  }
  SparseMat P(fine.size(), size());
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

}  // namespace chtumor
