// Shared independent oracles for the solver tests and the acceptance suite.
#ifndef CHTUMOR_TEST_ORACLES_HPP
#define CHTUMOR_TEST_ORACLES_HPP

#include <cmath>
#include <random>

#include "chtumor/solver.hpp"

namespace chtumor::testing {

inline ModelParams params_1d_study() {
  // the one-dimensional error-study parameter set
  ModelParams p;
  p.beta = 0.1;
  p.epsilon = 0.02;
  p.chi_phi = 1.0;
  p.chi_sigma = 1.0 / 0.02;  // eta = 0.02
  p.K = 1.0;
  p.lambda_p = 0.0;
  p.lambda_a = 5.0;
  p.lambda_c = 2.0;
  p.M = 0.0;
  p.m0 = 1.0;
  p.nutrient_mode = NutrientMode::ConstantInverseChiSigma;
  return p;
}

inline StateTriple random_state(const P1Space& space, std::mt19937& rng,
                                double lo = -1.5, double hi = 1.5) {
  std::uniform_real_distribution<double> dist(lo, hi);
  StateTriple s;
  s.mesh = space.mesh();
  s.phi.resize(space.size());
  s.mu.resize(space.size());
  s.sigma.resize(space.size());
  for (int i = 0; i < space.size(); ++i) {
    s.phi[i] = dist(rng);
    s.mu[i] = dist(rng);
    s.sigma[i] = dist(rng);
  }
  return s;
}

// Dense term-by-term quadrature assembly of the residual on a 1d mesh,
// written directly from the weak form as an independent check of the
// production assembly.
inline Eigen::VectorXd dense_residual_1d(const P1Space& space,
                                         const StateTriple& neu,
                                         const StateTriple& old, double dt,
                                         const ModelParams& mp,
                                         const BoundaryData& bc) {
  const auto& mesh = space.geom();
  const int n = mesh.num_vertices();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(3 * n);
  const double g = std::sqrt(3.0 / 5.0);
  const double qx[3] = {0.5 * (1 - g), 0.5, 0.5 * (1 + g)};
  const double qw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

  const bool inverse_mode =
      mp.nutrient_mode == NutrientMode::ConstantInverseChiSigma;

  for (int c = 0; c < mesh.num_cells(); ++c) {
    int a = mesh.cells[c][0], b = mesh.cells[c][1];
    double h = mesh.vertices[b][0] - mesh.vertices[a][0];
    auto lumped_phi = [&](int v) {
      return (neu.phi[v] - old.phi[v]) / dt -
             gamma_phi(neu.phi[v], neu.sigma[v], mp);
    };
    auto lumped_mu = [&](int v) {
      return neu.mu[v] - mp.A() * psi1_prime(neu.phi[v], mp) -
             mp.A() * psi2_prime(old.phi[v], mp) + mp.chi_phi * neu.sigma[v];
    };
    auto lumped_sigma = [&](int v) {
      return (neu.sigma[v] - old.sigma[v]) / dt +
             gamma_sigma(neu.phi[v], neu.sigma[v], mp);
    };
    double grad_mu = (neu.mu[b] - neu.mu[a]) / h;
    double grad_phi = (neu.phi[b] - neu.phi[a]) / h;
    double grad_sigma = (neu.sigma[b] - neu.sigma[a]) / h;
    double nutrient_flux =
        inverse_mode
            ? grad_sigma - mp.eta() * grad_phi
            : mp.n_const * (mp.chi_sigma * grad_sigma - mp.chi_phi * grad_phi);

    for (int local = 0; local < 2; ++local) {
      int p = (local == 0) ? a : b;
      double grad_test = (local == 0) ? -1.0 / h : 1.0 / h;
      double mass_phi = 0, mass_mu = 0, mass_sigma = 0, weight = 0;
      for (int q = 0; q < 3; ++q) {
        double lam_a = 1.0 - qx[q], lam_b = qx[q];
        // I_h of (integrand * hat_p) interpolates the nodal products
        double wp = (local == 0) ? lam_a : lam_b;
        int v = p;
        mass_phi += qw[q] * h * lumped_phi(v) * wp;
        mass_mu += qw[q] * h * lumped_mu(v) * wp;
        mass_sigma += qw[q] * h * lumped_sigma(v) * wp;
        double mob = mobility_m(old.phi[a], mp) * lam_a +
                     mobility_m(old.phi[b], mp) * lam_b;
        weight += qw[q] * h * mob;
      }
      r[p] += mass_phi + weight * grad_mu * grad_test;
      r[n + p] += mass_mu - mp.B() * h * grad_phi * grad_test;
      r[2 * n + p] += mass_sigma + h * nutrient_flux * grad_test;
    }
  }
  for (const auto& bf : mesh.boundary_facets) {
    if (bf.marker != BoundaryMarker::Robin) continue;
    int p = bf.v[0];
    r[2 * n + p] += mp.K * (neu.sigma[p] - bc.sigma_inf[p]);
  }
  return r;
}

}  // namespace chtumor::testing

#endif
