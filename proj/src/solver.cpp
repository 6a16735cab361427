#include "chtumor/solver.hpp"

#include <cmath>
#include <stdexcept>

#include "chtumor/diagnostics.hpp"

namespace chtumor {

void NewtonSettings::validate() const {
  if (!(abs_tol > 0) || !(rel_tol > 0))
    throw std::invalid_argument("NewtonSettings: tolerances must be > 0");
  if (max_iter < 1)
    throw std::invalid_argument("NewtonSettings: max_iter must be >= 1");
  if (!(damping > 0) || damping > 1.0)
    throw std::invalid_argument("NewtonSettings: damping must be in (0,1]");
}

Eigen::VectorXd chemical_potential_at(const P1Space& space,
                                      const Eigen::VectorXd& phi,
                                      const Eigen::VectorXd& sigma,
                                      const ModelParams& params) {
  Eigen::VectorXd psi_prime(space.size());
  for (int p = 0; p < space.size(); ++p)
    psi_prime[p] = psi1_prime(phi[p], params) + psi2_prime(phi[p], params);
  Eigen::VectorXd stiff_phi = space.stiffness() * phi;
  return params.A() * psi_prime - params.chi_phi * sigma +
         params.B() *
             (stiff_phi.array() / space.mass().diagonal.array()).matrix();
}

StateTriple build_initial_state(const P1Space& space, const ScalarFn& phi0,
                                const ScalarFn& sigma0,
                                const ModelParams& params) {
  StateTriple s;
  s.mesh = space.mesh();
  s.time = 0.0;
  s.phi = space.nodal_interpolate(phi0).values;
  s.sigma = space.clement_interpolate(sigma0).values;
  s.mu = chemical_potential_at(space, s.phi, s.sigma, params);
  return s;
}

InitialBounds initial_bounds(const P1Space& space, const StateTriple& state,
                             const ModelParams& params) {
  InitialBounds b;
  for (int p = 0; p < space.size(); ++p)
    b.lumped_psi += space.mass().diagonal[p] * psi(state.phi[p], params);
  NodalField phi(space.mesh(), state.phi);
  NodalField sigma(space.mesh(), state.sigma);
  double phi_l2 = space.norm_h(phi);
  double sig_l2 = space.norm_h(sigma);
  double phi_h1 = space.seminorm_H1(phi);
  double sig_h1 = space.seminorm_H1(sigma);
  b.phi_h1_sq = phi_l2 * phi_l2 + phi_h1 * phi_h1;
  b.sigma_h1_sq = sig_l2 * sig_l2 + sig_h1 * sig_h1;
  NodalField lap = space.discrete_laplacian(phi);
  b.laplace_phi_sq = space.lumped_inner(lap, lap);
  return b;
}

BoundaryData build_boundary_data(const P1Space& space, const TimeFn& sigma_inf,
                                 double t_prev, double t_next) {
  if (!(t_prev < t_next))
    throw std::invalid_argument("build_boundary_data: need t_prev < t_next");
  const double t_mid = 0.5 * (t_prev + t_next);
  NodalField f = space.clement_interpolate(
      [&](const std::array<double, 3>& x) { return sigma_inf(t_mid, x); });
  return BoundaryData{std::move(f.values)};
}

namespace {

struct SchemeWeights {
  Eigen::VectorXd mobility;   // I_h[m(phi_old)] nodal values
  SparseMat K_m;              // mobility-weighted stiffness
  SparseMat K_n;              // nutrient stiffness (already scaled)
  double sigma_coeff = 1.0;   // coefficient of sigma in the nutrient flux
  double phi_coeff = 0.0;     // coefficient of -phi in the nutrient flux
};

SchemeWeights scheme_weights(const P1Space& space, const StateTriple& old,
                             const ModelParams& params) {
  SchemeWeights w;
  w.mobility.resize(space.size());
  for (int p = 0; p < space.size(); ++p)
    w.mobility[p] = mobility_m(old.phi[p], params);
  w.K_m = space.assemble_stiffness(NodalField(space.mesh(), w.mobility));
  if (params.nutrient_mode == NutrientMode::ConstantInverseChiSigma) {
    // flux (grad sigma - eta grad phi) with unit diffusion
    w.K_n = space.stiffness();
    w.sigma_coeff = 1.0;
    w.phi_coeff = params.eta();
  } else {
    NodalField n_field = space.field(params.n_const);
    w.K_n = space.assemble_stiffness(n_field);
    w.sigma_coeff = params.chi_sigma;
    w.phi_coeff = params.chi_phi;
  }
  return w;
}

void check_step_inputs(const P1Space& space, const StateTriple& neu,
                       const StateTriple& old, double dt,
                       const BoundaryData& bc) {
  if (neu.mesh.get() != space.mesh().get() ||
      old.mesh.get() != space.mesh().get())
    throw std::invalid_argument("solver: state lives on a different mesh");
  if (!(dt > 0)) throw std::invalid_argument("solver: dt must be positive");
  if (bc.sigma_inf.size() != space.size())
    throw std::invalid_argument("solver: boundary data size mismatch");
}

}  // namespace

namespace {

Eigen::VectorXd residual_with_weights(const P1Space& space,
                                      const StateTriple& neu,
                                      const StateTriple& old, double dt,
                                      const ModelParams& params,
                                      const BoundaryData& bc,
                                      const SchemeWeights& w) {
  const int n = space.size();
  const auto& m = space.mass().diagonal;
  const auto& b_robin = space.mass().boundary_robin;

  Eigen::VectorXd r(3 * n);
  Eigen::VectorXd flux_mu = w.K_m * neu.mu;
  Eigen::VectorXd stiff_phi = space.stiffness() * neu.phi;
  Eigen::VectorXd flux_sigma =
      w.K_n * (w.sigma_coeff * neu.sigma - w.phi_coeff * neu.phi);
  for (int p = 0; p < n; ++p) {
    const double gphi = gamma_phi(neu.phi[p], neu.sigma[p], params);
    const double gsig = gamma_sigma(neu.phi[p], neu.sigma[p], params);
    r[p] = m[p] * ((neu.phi[p] - old.phi[p]) / dt - gphi) + flux_mu[p];
    r[n + p] = m[p] * (neu.mu[p] - params.A() * psi1_prime(neu.phi[p], params) -
                       params.A() * psi2_prime(old.phi[p], params) +
                       params.chi_phi * neu.sigma[p]) -
               params.B() * stiff_phi[p];
    r[2 * n + p] = m[p] * ((neu.sigma[p] - old.sigma[p]) / dt + gsig) +
                   flux_sigma[p] +
                   params.K * b_robin[p] * (neu.sigma[p] - bc.sigma_inf[p]);
  }
  return r;
}

SparseMat jacobian_with_weights(const P1Space& space, const StateTriple& neu,
                                double dt, const ModelParams& params,
                                const SchemeWeights& w) {
  const int n = space.size();
  const auto& m = space.mass().diagonal;
  const auto& b_robin = space.mass().boundary_robin;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * (w.K_m.nonZeros() + 2 * n));
  auto add_block = [&trips, n](int bi, int bj, const SparseMat& A,
                               double scale) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A, k); it; ++it)
        trips.emplace_back(bi * n + static_cast<int>(it.row()),
                           bj * n + static_cast<int>(it.col()),
                           scale * it.value());
  };

  for (int p = 0; p < n; ++p) {
    const double dgphi_dr = gamma_phi_dr(neu.phi[p], neu.sigma[p], params);
    const double dgphi_ds = gamma_phi_ds(neu.phi[p], neu.sigma[p], params);
    const double dgsig_dr = gamma_sigma_dr(neu.phi[p], neu.sigma[p], params);
    const double dgsig_ds = gamma_sigma_ds(neu.phi[p], neu.sigma[p], params);
    // phi row
    trips.emplace_back(p, p, m[p] * (1.0 / dt - dgphi_dr));
    trips.emplace_back(p, 2 * n + p, -m[p] * dgphi_ds);
    // mu row
    trips.emplace_back(n + p, p,
                       -m[p] * params.A() * psi1_second(neu.phi[p], params));
    trips.emplace_back(n + p, n + p, m[p]);
    trips.emplace_back(n + p, 2 * n + p, m[p] * params.chi_phi);
    // sigma row
    trips.emplace_back(2 * n + p, p, m[p] * dgsig_dr);
    trips.emplace_back(2 * n + p, 2 * n + p,
                       m[p] * (1.0 / dt + dgsig_ds) + params.K * b_robin[p]);
  }
  add_block(0, 1, w.K_m, 1.0);                       // mobility flux
  add_block(1, 0, space.stiffness(), -params.B());   // -B grad phi . grad rho
  add_block(2, 2, w.K_n, w.sigma_coeff);
  add_block(2, 0, w.K_n, -w.phi_coeff);
  // structural zeros keep the stored pattern symmetric
  add_block(0, 2, w.K_n, 0.0);
  for (int p = 0; p < n; ++p) trips.emplace_back(2 * n + p, n + p, 0.0);

  SparseMat J(3 * n, 3 * n);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

}  // namespace

Eigen::VectorXd assemble_residual(const P1Space& space, const StateTriple& neu,
                                  const StateTriple& old, double dt,
                                  const ModelParams& params,
                                  const BoundaryData& bc) {
  check_step_inputs(space, neu, old, dt, bc);
  SchemeWeights w = scheme_weights(space, old, params);
  return residual_with_weights(space, neu, old, dt, params, bc, w);
}

SparseMat assemble_jacobian(const P1Space& space, const StateTriple& neu,
                            const StateTriple& old, double dt,
                            const ModelParams& params, const BoundaryData& bc) {
  check_step_inputs(space, neu, old, dt, bc);
  SchemeWeights w = scheme_weights(space, old, params);
  return jacobian_with_weights(space, neu, dt, params, w);
}

ImplicitStepper::ImplicitStepper(std::shared_ptr<const P1Space> space,
                                 ModelParams params, NewtonSettings settings)
    : space_(std::move(space)), params_(std::move(params)),
      settings_(settings) {
  params_.validate();
  settings_.validate();
}

namespace {

double lumped_residual_norm(const P1Space& space, const Eigen::VectorXd& r) {
  // lumped norm of the Riesz representer M^{-1} r, blockwise
  const int n = space.size();
  const auto& m = space.mass().diagonal;
  double s = 0;
  for (int b = 0; b < 3; ++b)
    for (int p = 0; p < n; ++p) s += r[b * n + p] * r[b * n + p] / m[p];
  return std::sqrt(s);
}

// Right-preconditioned BiCGSTAB with exact matrix products. Returns the
// number of sweeps on success, 0 on breakdown or when the cap is hit.
int bicgstab(const SparseMat& A, const Eigen::VectorXd& b,
             const Eigen::IncompleteLUT<double>& precond, Eigen::VectorXd& x,
             double rel_tol, int max_iter) {
  const double b_norm = b.norm();
  x.setZero(b.size());
  if (b_norm == 0.0) return 1;
  Eigen::VectorXd r = b;
  Eigen::VectorXd r_hat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd p = v;
  const double tiny = std::numeric_limits<double>::min() * 1e3;
  for (int it = 1; it <= max_iter; ++it) {
    double rho_new = r_hat.dot(r);
    if (std::abs(rho_new) < tiny) return 0;
    double beta = (rho_new / rho) * (alpha / omega);
    p = r + beta * (p - omega * v);
    Eigen::VectorXd y = precond.solve(p);
    v = A * y;
    double rhv = r_hat.dot(v);
    if (std::abs(rhv) < tiny) return 0;
    alpha = rho_new / rhv;
    Eigen::VectorXd s = r - alpha * v;
    if (s.norm() <= rel_tol * b_norm) {
      x += alpha * y;
      return it;
    }
    Eigen::VectorXd z = precond.solve(s);
    Eigen::VectorXd t = A * z;
    double tt = t.squaredNorm();
    if (tt < tiny) return 0;
    omega = t.dot(s) / tt;
    x += alpha * y + omega * z;
    r = s - omega * t;
    if (!std::isfinite(r.norm())) return 0;
    if (r.norm() <= rel_tol * b_norm) return it;
    rho = rho_new;
  }
  return 0;
}

// Solves J delta = r with the configured strategy. In iterative mode the
// preconditioner is kept across steps as long as the Krylov iteration stays
// fast; a slow or stalled solve refreshes it, and a stall after a refresh
// falls back to the direct factorization. Matrix products always use the
// current Jacobian, so the Newton iterates are unaffected.
Eigen::VectorXd solve_linear(LinearContext& ctx, const SparseMat& J,
                             const Eigen::VectorXd& r,
                             std::vector<double>* history) {
  if (ctx.kind == LinearSolverKind::IterativeILUT) {
    const int fast_iters = 30;
    auto refresh = [&ctx, &J] {
      ctx.ilut.setDroptol(1e-5);
      ctx.ilut.setFillfactor(20);
      ctx.ilut.compute(J);
      ctx.ilut_ready = true;
    };
    if (!ctx.ilut_ready) refresh();
    Eigen::VectorXd delta;
    int used = bicgstab(J, r, ctx.ilut, delta, 1e-12, 200);
    if (used > 0 && used <= fast_iters) return delta;
    refresh();
    used = bicgstab(J, r, ctx.ilut, delta, 1e-12, 200);
    if (used > 0) return delta;
    ctx.ilut_ready = false;  // direct fallback below
  }
  if (!ctx.pattern_ready) {
    ctx.lu.analyzePattern(J);
    ctx.pattern_ready = true;
  }
  ctx.lu.factorize(J);
  if (ctx.lu.info() != Eigen::Success) {
    SolverError err(
        "sparse factorization failed (singular Jacobian); dt may be too "
        "large or the parameters violate the assumptions");
    if (history) err.residual_history = *history;
    throw err;
  }
  return ctx.lu.solve(r);
}

std::pair<StateTriple, StepReport> newton_solve(
    const P1Space& space, const StateTriple& guess, const StateTriple& old,
    double dt, const ModelParams& params, const BoundaryData& bc,
    const NewtonSettings& settings, LinearContext* ctx) {
  LinearContext local_ctx;
  if (!ctx) ctx = &local_ctx;
  ctx->kind = settings.linear_solver;

  StateTriple cur = guess;
  cur.time = old.time + dt;
  StepReport report;

  check_step_inputs(space, cur, old, dt, bc);
  // the explicit-in-time weights are fixed within the step
  const SchemeWeights weights = scheme_weights(space, old, params);

  Eigen::VectorXd r =
      residual_with_weights(space, cur, old, dt, params, bc, weights);
  double rnorm = lumped_residual_norm(space, r);
  report.residual_history.push_back(rnorm);
  const double target = std::max(settings.abs_tol, settings.rel_tol * rnorm);

  const int n = space.size();
  while (rnorm > target) {
    if (report.newton_iterations >= settings.max_iter) {
      SolverError err(
          "Newton did not converge in " + std::to_string(settings.max_iter) +
          " iterations (residual " + std::to_string(rnorm) +
          "); consider a smaller dt or check the assumption report");
      err.residual_history = report.residual_history;
      throw err;
    }
    SparseMat J = jacobian_with_weights(space, cur, dt, params, weights);
    Eigen::VectorXd delta =
        solve_linear(*ctx, J, r, &report.residual_history);
    ++report.linear_solves;

    double scale = settings.damping;
    StateTriple best;
    Eigen::VectorXd best_r;
    double best_norm = std::numeric_limits<double>::max();
    for (int half = 0; half <= settings.max_halvings; ++half) {
      StateTriple trial = cur;
      trial.phi -= scale * delta.segment(0, n);
      trial.mu -= scale * delta.segment(n, n);
      trial.sigma -= scale * delta.segment(2 * n, n);
      Eigen::VectorXd rt =
          residual_with_weights(space, trial, old, dt, params, bc, weights);
      double tnorm = lumped_residual_norm(space, rt);
      if (tnorm < best_norm) {
        best = std::move(trial);
        best_r = std::move(rt);
        best_norm = tnorm;
      }
      if (best_norm < rnorm) break;  // damping only on residual increase
      scale *= 0.5;
    }
    if (!std::isfinite(best_norm) ||
        best_norm == std::numeric_limits<double>::max()) {
      SolverError err("Newton step produced a non-finite residual");
      err.residual_history = report.residual_history;
      throw err;
    }
    cur = std::move(best);
    r = std::move(best_r);
    rnorm = best_norm;
    ++report.newton_iterations;
    report.residual_history.push_back(rnorm);
  }
  report.final_residual = rnorm;
  return {std::move(cur), report};
}

}  // namespace

std::pair<StateTriple, StepReport> ImplicitStepper::step(
    const StateTriple& old, double dt, const BoundaryData& bc) const {
  return newton_solve(*space_, old, old, dt, params_, bc, settings_, &linear_);
}

std::pair<StateTriple, StepReport> newton_step_solve(
    const P1Space& space, const StateTriple& guess, const StateTriple& old,
    double dt, const ModelParams& params, const BoundaryData& bc,
    const NewtonSettings& settings) {
  params.validate();
  settings.validate();
  return newton_solve(space, guess, old, dt, params, bc, settings, nullptr);
}

std::pair<StateTriple, StepReport> step(const P1Space& space,
                                        const StateTriple& old, double dt,
                                        const ModelParams& params,
                                        const BoundaryData& bc,
                                        const NewtonSettings& settings) {
  params.validate();
  settings.validate();
  return newton_solve(space, old, old, dt, params, bc, settings, nullptr);
}

namespace {

// Refine toward the interface until every marked cell is at or below the
// target diameter; returns the adapted space and state.
std::pair<std::shared_ptr<const P1Space>, StateTriple> adapt_mesh(
    std::shared_ptr<const P1Space> space, StateTriple state,
    const AdaptPolicy& policy) {
  for (int pass = 0; pass < policy.max_passes; ++pass) {
    const auto& mesh = *space->mesh();
    std::vector<double> phi(state.phi.data(), state.phi.data() + state.phi.size());
    CellMarkSet marks = mark_interface(mesh, phi, policy.threshold);
    CellMarkSet coarse_marks;
    for (int c : marks.marked)
      if (mesh.cell_diameter(c) > policy.h_min * (1.0 + 1e-12))
        coarse_marks.marked.insert(c);
    if (coarse_marks.marked.empty()) break;
    RefinementResult ref = refine(space->mesh(), coarse_marks);
    const int old_n = space->size();
    const int new_n = ref.mesh->num_vertices();
    auto grow = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd out(new_n);
      out.head(old_n) = v;
      for (int i = old_n; i < new_n; ++i) {
        const auto& par = ref.midpoint_parents[i - old_n];
        out[i] = 0.5 * (v[par[0]] + v[par[1]]);
      }
      return out;
    };
    state.phi = grow(state.phi);
    state.mu = grow(state.mu);
    state.sigma = grow(state.sigma);
    state.mesh = ref.mesh;
    space = std::make_shared<P1Space>(ref.mesh);
  }
  return {space, std::move(state)};
}

}  // namespace

RunResult run(std::shared_ptr<const P1Space> space, const StateTriple& initial,
              const RunOptions& options, const ModelParams& params,
              const TimeFn& sigma_inf, const NewtonSettings& settings) {
  if (!(options.T > 0) || !(options.dt > 0))
    throw std::invalid_argument("run: T and dt must be positive");

  RunResult result;
  result.ledger = std::make_shared<DiagnosticsLedger>();
  result.trajectory.dt_nominal = options.dt;

  StateTriple state = initial;
  state.time = 0.0;
  if (options.adapt.enabled) {
    auto adapted = adapt_mesh(space, std::move(state), options.adapt);
    space = adapted.first;
    state = std::move(adapted.second);
  }

  auto stepper =
      std::make_unique<ImplicitStepper>(space, params, settings);

  const int n_steps = static_cast<int>(std::ceil(options.T / options.dt - 1e-12));
  std::optional<BoundaryData> cached_bc;
  const SimplicialMesh* cached_bc_mesh = nullptr;
  auto push_snapshot = [&](const StateTriple& s) {
    result.trajectory.snapshots.push_back({s, space});
  };
  result.trajectory.times.push_back(0.0);
  push_snapshot(state);

  for (int step_idx = 1; step_idx <= n_steps; ++step_idx) {
    if (options.adapt.enabled && step_idx > 1 &&
        (step_idx - 1) % options.adapt.every == 0) {
      auto adapted = adapt_mesh(space, std::move(state), options.adapt);
      if (adapted.first.get() != space.get()) {
        space = adapted.first;
        stepper = std::make_unique<ImplicitStepper>(space, params, settings);
      }
      state = std::move(adapted.second);
    }

    const double t_prev = state.time;
    const double t_next = std::min(options.T, step_idx * options.dt);
    const double dt = t_next - t_prev;
    if (!options.sigma_inf_constant_in_time || !cached_bc ||
        cached_bc_mesh != space->mesh().get()) {
      cached_bc = build_boundary_data(*space, sigma_inf, t_prev, t_next);
      cached_bc_mesh = space->mesh().get();
    }
    const BoundaryData& bc = *cached_bc;

    StateTriple old = state;
    StepReport report;
    try {
      std::tie(state, report) = stepper->step(old, dt, bc);
    } catch (SolverError& err) {
      throw SolverError(std::string(err.what()) + " at step " +
                        std::to_string(step_idx) + ", t = " +
                        std::to_string(t_next));
    }
    state.time = t_next;
    result.total_newton_iterations += report.newton_iterations;

    if (options.record_diagnostics)
      result.ledger->accumulate_step(*space, old, state, dt, params,
                                     report.newton_iterations,
                                     options.record_laplacian);
    result.trajectory.times.push_back(t_next);
    if (step_idx % options.snapshot_stride == 0 || step_idx == n_steps)
      push_snapshot(state);
    if (options.observer) options.observer(*space, state, report);
  }
  result.final_space = space;
  return result;
}

}  // namespace chtumor
