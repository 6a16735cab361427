#include <doctest.h>

#include <cmath>
#include <random>

#include "chtumor/fem.hpp"

using namespace chtumor;

namespace {

P1Space make_interval_space(int n) {
  return P1Space(build_interval_mesh(0.0, 1.0, n));
}

// Quadrature evaluation of a P1 field at the rule points of one cell.
double p1_at_point(const SimplicialMesh& mesh, const Eigen::VectorXd& u,
                   int cell, const std::array<double, 4>& bary) {
  double v = 0;
  for (int i = 0; i <= mesh.dim; ++i) v += bary[i] * u[mesh.cells[cell][i]];
  return v;
}

// Dense-quadrature L2 inner product of two P1 fields (the non-lumped value).
double l2_inner_oracle(const P1Space& space, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& v) {
  const auto& mesh = space.geom();
  const auto& quad = SimplexQuadrature::get(mesh.dim);
  double total = 0;
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (std::size_t q = 0; q < quad.points.size(); ++q)
      total += quad.weights[q] * mesh.cell_volume(c) *
               p1_at_point(mesh, u, c, quad.points[q]) *
               p1_at_point(mesh, v, c, quad.points[q]);
  return total;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("cell quadrature integrates barycentric monomials exactly") {
  // int_K prod l_i^{a_i} = d! |K| prod(a_i!) / (sum a_i + d)!
  for (int dim = 1; dim <= 3; ++dim) {
    const auto& quad = SimplexQuadrature::get(dim);
    double wsum = 0;
    for (double w : quad.weights) {
      CHECK(w > 0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<std::array<int, 4>> exponents = {
        {4, 0, 0, 0}, {3, 1, 0, 0}, {2, 2, 0, 0}, {2, 1, 1, 0}, {1, 1, 1, 1}};
    for (const auto& a : exponents) {
      int total_deg = 0;
      double expected = factorial(dim);
      for (int i = 0; i <= dim; ++i) {
        total_deg += a[i];
        expected *= factorial(a[i]);
      }
      for (int i = dim + 1; i < 4; ++i)
        if (a[i] != 0) total_deg = -1;  // exponent on a missing coordinate
      if (total_deg < 0) continue;
      expected /= factorial(total_deg + dim);
      double got = 0;
      for (std::size_t q = 0; q < quad.points.size(); ++q) {
        double term = quad.weights[q];
        for (int i = 0; i <= dim; ++i)
          term *= std::pow(quad.points[q][i], a[i]);
        got += term;
      }
      CHECK(got == doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("lumped inner product on hand-checked meshes") {
  P1Space space = make_interval_space(2);  // nodes 0, 0.5, 1
  NodalField one = space.field(1.0);
  CHECK(space.lumped_inner(one, one) == doctest::Approx(1.0).epsilon(1e-14));

  NodalField x = space.nodal_interpolate(
      [](const std::array<double, 3>& p) { return p[0]; });
  CHECK(space.lumped_inner(x, one) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(space.lumped_inner(x, x) == doctest::Approx(0.375).epsilon(1e-14));

  CHECK(space.mass().diagonal.sum() == doctest::Approx(1.0).epsilon(1e-14));

  P1Space other = make_interval_space(2);
  NodalField foreign = other.field(1.0);
  CHECK_THROWS_AS(space.lumped_inner(one, foreign), std::invalid_argument);
}

TEST_CASE("boundary lumped inner product") {
  P1Space interval = make_interval_space(4);
  NodalField one1 = interval.field(1.0);
  CHECK(interval.lumped_boundary_inner(one1, one1) ==
        doctest::Approx(2.0).epsilon(1e-14));

  P1Space square(build_rect_mesh(0, 0, 1, 1, 4, 4));
  NodalField one2 = square.field(1.0);
  CHECK(square.lumped_boundary_inner(one2, one2) ==
        doctest::Approx(4.0).epsilon(1e-14));

  // Robin on the two outer sides only
  P1Space quarter(
      build_rect_mesh(0, 0, 1, 1, 4, 4, symmetric_quarter_rule(0, 0)));
  NodalField one3 = quarter.field(1.0);
  CHECK(quarter.lumped_boundary_inner(one3, one3, BoundaryFilter::Robin) ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK(quarter.lumped_boundary_inner(one3, one3, BoundaryFilter::Neumann) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("stiffness assembly") {
  P1Space space = make_interval_space(2);  // h = 0.5
  const SparseMat& K = space.stiffness();
  CHECK(K.coeff(1, 0) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(K.coeff(1, 1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(K.coeff(1, 2) == doctest::Approx(-2.0).epsilon(1e-14));

  // row sums vanish (gradients annihilate constants)
  Eigen::VectorXd rows = K * Eigen::VectorXd::Ones(space.size());
  CHECK(rows.cwiseAbs().maxCoeff() < 1e-13);

  // constant weight scales linearly
  NodalField w = space.field(3.0);
  SparseMat Kw = space.assemble_stiffness(w);
  for (int k = 0; k < K.outerSize(); ++k)
    for (SparseMat::InnerIterator it(K, k); it; ++it)
      CHECK(Kw.coeff(it.row(), it.col()) ==
            doctest::Approx(3.0 * it.value()).epsilon(1e-13));

  NodalField negative = space.field(-1.0);
  CHECK_THROWS_AS(space.assemble_stiffness(negative), std::invalid_argument);

  // doubling a varying weight doubles the quadratic form
  P1Space fine = make_interval_space(16);
  NodalField weight = fine.nodal_interpolate(
      [](const std::array<double, 3>& p) { return 1.0 + p[0]; });
  NodalField dbl(fine.mesh(), 2.0 * weight.values);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  Eigen::VectorXd u(fine.size());
  for (int i = 0; i < fine.size(); ++i) u[i] = dist(rng);
  SparseMat K1 = fine.assemble_stiffness(weight);
  SparseMat K2 = fine.assemble_stiffness(dbl);
  CHECK(u.dot(K2 * u) == doctest::Approx(2.0 * u.dot(K1 * u)).epsilon(1e-13));
}

TEST_CASE("2d stiffness row sums vanish on refined meshes") {
  auto mesh = build_rect_mesh(0, 0, 2, 1, 4, 2);
  CellMarkSet marks;
  marks.marked = {0, 3};
  auto refined = refine(mesh, marks).mesh;
  P1Space space(refined);
  Eigen::VectorXd rows = space.stiffness() * Eigen::VectorXd::Ones(space.size());
  CHECK(rows.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("nodal interpolation") {
  P1Space space = make_interval_space(8);
  NodalField c = space.nodal_interpolate(
      [](const std::array<double, 3>&) { return 3.5; });
  CHECK((c.values.array() == 3.5).all());

  const double eps = 0.02;
  NodalField t = space.nodal_interpolate([eps](const std::array<double, 3>& p) {
    return std::tanh((0.2 - std::abs(p[0] - 0.5)) / (std::sqrt(2.0) * eps));
  });
  for (int i = 0; i < space.size(); ++i) {
    double x = space.geom().vertices[i][0];
    CHECK(t.values[i] ==
          doctest::Approx(
              std::tanh((0.2 - std::abs(x - 0.5)) / (std::sqrt(2.0) * eps)))
              .epsilon(1e-14));
  }
}

TEST_CASE("clement interpolation") {
  P1Space space = make_interval_space(2);
  NodalField c = space.clement_interpolate(
      [](const std::array<double, 3>&) { return 2.0; });
  for (int i = 0; i < space.size(); ++i)
    CHECK(c.values[i] == doctest::Approx(2.0).epsilon(1e-13));

  // linear functions are reproduced exactly
  NodalField lin = space.clement_interpolate(
      [](const std::array<double, 3>& p) { return 3.0 * p[0] - 1.0; });
  for (int i = 0; i < space.size(); ++i)
    CHECK(lin.values[i] ==
          doctest::Approx(3.0 * space.geom().vertices[i][0] - 1.0)
              .epsilon(1e-12));

  // x^2 on the 2-cell unit interval: patch projection at node 0.5 is x - 1/6
  NodalField sq = space.clement_interpolate(
      [](const std::array<double, 3>& p) { return p[0] * p[0]; });
  CHECK(sq.values[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // 2d linear reproduction, including on an adapted mesh
  auto mesh = build_rect_mesh(0, 0, 1, 1, 3, 3);
  CellMarkSet marks;
  marks.marked = {0, 7};
  P1Space space2(refine(mesh, marks).mesh);
  NodalField lin2 = space2.clement_interpolate(
      [](const std::array<double, 3>& p) { return 2.0 * p[0] - p[1] + 0.5; });
  for (int i = 0; i < space2.size(); ++i) {
    const auto& v = space2.geom().vertices[i];
    CHECK(lin2.values[i] ==
          doctest::Approx(2.0 * v[0] - v[1] + 0.5).epsilon(1e-12));
  }
}

TEST_CASE("lumped projection") {
  P1Space space = make_interval_space(4);
  NodalField c = space.lumped_projection(
      [](const std::array<double, 3>&) { return 2.5; });
  for (int i = 0; i < space.size(); ++i)
    CHECK(c.values[i] == doctest::Approx(2.5).epsilon(1e-13));

  // hat function at an interior node: (2h/3) / h = 2/3
  const double h = 0.25;
  auto hat = [h](const std::array<double, 3>& p) {
    return std::max(0.0, 1.0 - std::abs(p[0] - 0.5) / h);
  };
  NodalField proj = space.lumped_projection(hat);
  CHECK(proj.values[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // defining identity <Qf, z>_h = (f, z)_L2 against the quadrature oracle
  // for every basis function on a 5-node mesh
  auto f = [](const std::array<double, 3>& p) {
    return std::sin(3.0 * p[0]) + 0.5 * p[0] * p[0];
  };
  NodalField qf = space.lumped_projection(f);
  const auto& mesh = space.geom();
  const auto& quad = SimplexQuadrature::get(1);
  for (int p = 0; p < space.size(); ++p) {
    NodalField basis(space.mesh());
    basis.values[p] = 1.0;
    double rhs = 0;  // (f, l_p) by dense quadrature
    for (int cell = 0; cell < mesh.num_cells(); ++cell)
      for (std::size_t q = 0; q < quad.points.size(); ++q) {
        std::array<double, 3> x{0, 0, 0};
        for (int i = 0; i <= 1; ++i)
          x[0] += quad.points[q][i] * mesh.vertices[mesh.cells[cell][i]][0];
        rhs += quad.weights[q] * mesh.cell_volume(cell) * f(x) *
               p1_at_point(mesh, basis.values, cell, quad.points[q]);
      }
    CHECK(space.lumped_inner(qf, basis) == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("discrete laplacian") {
  P1Space space = make_interval_space(2);  // h = 0.5
  NodalField q(space.mesh());
  q.values << 0.0, 1.0, 0.0;
  NodalField lap = space.discrete_laplacian(q);
  CHECK(lap.values[0] == doctest::Approx(8.0).epsilon(1e-13));
  CHECK(lap.values[1] == doctest::Approx(-8.0).epsilon(1e-13));
  CHECK(lap.values[2] == doctest::Approx(8.0).epsilon(1e-13));

  // Neumann compatibility for arbitrary data
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-2, 2);
  P1Space fine = make_interval_space(17);
  NodalField r(fine.mesh());
  for (int i = 0; i < fine.size(); ++i) r.values[i] = dist(rng);
  NodalField lap_r = fine.discrete_laplacian(r);
  CHECK(fine.lumped_inner(lap_r, fine.field(1.0)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // linear data: zero away from the boundary rows
  NodalField lin = fine.nodal_interpolate(
      [](const std::array<double, 3>& p) { return 2.0 * p[0] + 1.0; });
  NodalField lap_lin = fine.discrete_laplacian(lin);
  for (int i = 1; i + 1 < fine.size(); ++i)
    CHECK(std::abs(lap_lin.values[i]) < 1e-11);
}

TEST_CASE("norms") {
  P1Space space(build_rect_mesh(0, 0, 2, 1, 4, 2));
  NodalField c = space.field(-3.0);
  CHECK(space.norm_h(c) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-13));
  CHECK(space.seminorm_H1(c) == doctest::Approx(0.0).epsilon(1e-13));

  P1Space interval = make_interval_space(13);
  NodalField x = interval.nodal_interpolate(
      [](const std::array<double, 3>& p) { return p[0]; });
  CHECK(interval.seminorm_H1(x) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("norm equivalence bracket is mesh independent") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-1, 1);
  double lo = std::numeric_limits<double>::max(), hi = 0;
  for (int n : {8, 16, 32, 64}) {
    P1Space space = make_interval_space(n);
    for (int trial = 0; trial < 20; ++trial) {
      NodalField u(space.mesh());
      for (int i = 0; i < space.size(); ++i) u.values[i] = dist(rng);
      double lumped = space.lumped_inner(u, u);
      double exact = l2_inner_oracle(space, u.values, u.values);
      double ratio = lumped / exact;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  // P1 mass lumping in 1d: ratio within [1, 3] independent of h
  CHECK(lo >= 1.0 - 1e-12);
  CHECK(hi <= 3.0 + 1e-12);
}

TEST_CASE("lumping error decays at second order") {
  auto smooth = [](const std::array<double, 3>& p) {
    return std::sin(2.0 * p[0]) + 0.3 * std::cos(5.0 * p[0]);
  };
  auto smooth2 = [](const std::array<double, 3>& p) {
    return std::cos(3.0 * p[0]);
  };
  std::vector<double> errs, hs;
  for (int n : {8, 16, 32, 64}) {
    P1Space space = make_interval_space(n);
    NodalField u = space.nodal_interpolate(smooth);
    NodalField v = space.nodal_interpolate(smooth2);
    errs.push_back(std::abs(space.lumped_inner(u, v) -
                            l2_inner_oracle(space, u.values, v.values)));
    hs.push_back(1.0 / n);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    double order = std::log(errs[i - 1] / errs[i]) / std::log(2.0);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("clement error decays at second order") {
  auto smooth = [](const std::array<double, 3>& p) {
    return std::sin(2.0 * M_PI * p[0]);
  };
  std::vector<double> errs;
  for (int n : {8, 16, 32, 64}) {
    P1Space space = make_interval_space(n);
    NodalField cl = space.clement_interpolate(smooth);
    double err_sq = space.integrate([&](const std::array<double, 3>& x) {
      double interp = space.evaluate(cl, x);
      double d = smooth(x) - interp;
      return d * d;
    });
    errs.push_back(std::sqrt(err_sq));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    double order = std::log(errs[i - 1] / errs[i]) / std::log(2.0);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("discrete laplacian converges for zero-Neumann data") {
  auto f = [](const std::array<double, 3>& p) {
    return std::cos(M_PI * p[0]);
  };
  auto lap_f = [](const std::array<double, 3>& p) {
    return -M_PI * M_PI * std::cos(M_PI * p[0]);
  };
  std::vector<double> errs;
  for (int n : {16, 32, 64, 128}) {
    P1Space space = make_interval_space(n);
    NodalField u = space.nodal_interpolate(f);
    NodalField lap = space.discrete_laplacian(u);
    NodalField target = space.nodal_interpolate(lap_f);
    NodalField diff(space.mesh(), lap.values - target.values);
    errs.push_back(space.norm_h(diff));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    double order = std::log(errs[i - 1] / errs[i]) / std::log(2.0);
    CHECK(order >= 1.0);
  }
}

TEST_CASE("prolongation is exact for nested interval meshes") {
  P1Space coarse = make_interval_space(8);
  P1Space fine = make_interval_space(32);
  SparseMat P = coarse.prolongation_to(fine);
  NodalField u = coarse.nodal_interpolate(
      [](const std::array<double, 3>& p) { return p[0] * (1 - p[0]); });
  Eigen::VectorXd uf = P * u.values;
  for (int i = 0; i < fine.size(); ++i) {
    double x = fine.geom().vertices[i][0];
    CHECK(uf[i] == doctest::Approx(coarse.evaluate(u, {x, 0, 0})).epsilon(1e-13));
  }
}
