#ifndef CHTUMOR_SOLVER_HPP
#define CHTUMOR_SOLVER_HPP

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "chtumor/fem.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

/// Discrete solution triplet at one time level.
struct StateTriple {
  MeshPtr mesh;
  Eigen::VectorXd phi, mu, sigma;
  double time = 0.0;
};

/// Per-step nodal boundary values of the nutrient supply, used on Robin
/// facets only.
struct BoundaryData {
  Eigen::VectorXd sigma_inf;
};

/// Inner linear solver. Direct is the default; the iterative option keeps
/// exact Jacobian products but reuses an incomplete-LU preconditioner
/// across the Newton iterations of a step, falling back to the direct
/// factorization whenever it stalls.
enum class LinearSolverKind { Direct, IterativeILUT };

struct NewtonSettings {
  double abs_tol = 1e-10;  // lumped norm of the residual
  double rel_tol = 1e-12;
  int max_iter = 30;
  double damping = 1.0;  // initial step scale, halved on residual increase
  int max_halvings = 5;
  LinearSolverKind linear_solver = LinearSolverKind::Direct;

  void validate() const;
};

struct StepReport {
  int newton_iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
  int linear_solves = 0;
};

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  std::vector<double> residual_history;
};

using TimeFn = std::function<double(double, const std::array<double, 3>&)>;

/// Solves the lumped chemical-potential equation for mu at given (phi,
/// sigma), with the concave part evaluated at phi as well:
/// mu = A psi'(phi) - chi_phi sigma - B Laplace_h phi.
Eigen::VectorXd chemical_potential_at(const P1Space& space,
                                      const Eigen::VectorXd& phi,
                                      const Eigen::VectorXd& sigma,
                                      const ModelParams& params);

/// phi via nodal interpolation, sigma via Clement interpolation, mu from the
/// chemical-potential equation evaluated at this data.
StateTriple build_initial_state(const P1Space& space, const ScalarFn& phi0,
                                const ScalarFn& sigma0,
                                const ModelParams& params);

/// The four quantities whose boundedness the initial data must satisfy:
/// int I_h[psi(phi0)], |phi0|_{H1}^2, |Delta_h phi0|_h^2, |sigma0|_{H1}^2.
struct InitialBounds {
  double lumped_psi = 0;
  double phi_h1_sq = 0;
  double laplace_phi_sq = 0;
  double sigma_h1_sq = 0;
};
InitialBounds initial_bounds(const P1Space& space, const StateTriple& state,
                             const ModelParams& params);

/// Time average of the Clement interpolant over [t_prev, t_next], with the
/// midpoint rule in time (exact for data constant in t).
BoundaryData build_boundary_data(const P1Space& space, const TimeFn& sigma_inf,
                                 double t_prev, double t_next);

/// Residual of the three lumped equations against every basis function.
/// Layout: [phi rows | mu rows | sigma rows], length 3N. Mobility and the
/// concave potential derivative are taken at the old state, everything else
/// at the new one.
Eigen::VectorXd assemble_residual(const P1Space& space, const StateTriple& neu,
                                  const StateTriple& old, double dt,
                                  const ModelParams& params,
                                  const BoundaryData& bc);

/// Exact derivative of assemble_residual with respect to the new unknowns.
SparseMat assemble_jacobian(const P1Space& space, const StateTriple& neu,
                            const StateTriple& old, double dt,
                            const ModelParams& params, const BoundaryData& bc);

/// Reusable linear-solver state: the symbolic pattern of the direct
/// factorization and, in iterative mode, the incomplete-LU preconditioner.
struct LinearContext {
  Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>> lu;
  bool pattern_ready = false;
  Eigen::IncompleteLUT<double> ilut;
  bool ilut_ready = false;
  LinearSolverKind kind = LinearSolverKind::Direct;
};

/// One implicit step of the coupled scheme, solved with a damped Newton
/// method and a sparse direct factorization. Reuses the symbolic pattern
/// across calls on the same mesh.
class ImplicitStepper {
public:
  ImplicitStepper(std::shared_ptr<const P1Space> space, ModelParams params,
                  NewtonSettings settings);

  const P1Space& space() const { return *space_; }
  const ModelParams& params() const { return params_; }

  std::pair<StateTriple, StepReport> step(const StateTriple& old, double dt,
                                          const BoundaryData& bc) const;

private:
  std::shared_ptr<const P1Space> space_;
  ModelParams params_;
  NewtonSettings settings_;
  mutable LinearContext linear_;
};

std::pair<StateTriple, StepReport> newton_step_solve(
    const P1Space& space, const StateTriple& guess, const StateTriple& old,
    double dt, const ModelParams& params, const BoundaryData& bc,
    const NewtonSettings& settings);

std::pair<StateTriple, StepReport> step(const P1Space& space,
                                        const StateTriple& old, double dt,
                                        const ModelParams& params,
                                        const BoundaryData& bc,
                                        const NewtonSettings& settings);

struct AdaptPolicy {
  bool enabled = false;
  int every = 10;          // adaptation cadence in steps
  double threshold = 0.95; // interface marking threshold
  double h_min = 0.0;      // cells at or below this diameter are not refined
  int max_passes = 30;
};

struct Snapshot {
  StateTriple state;
  std::shared_ptr<const P1Space> space;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<double> times;  // all step times including t=0
  double dt_nominal = 0.0;
};

struct RunOptions {
  double T = 0.1;
  double dt = 1e-3;
  int snapshot_stride = 1;  // store every k-th state (plus first and last)
  AdaptPolicy adapt;
  bool record_diagnostics = true;
  bool record_laplacian = false;
  /// Reuse the boundary data across steps (valid when sigma_inf does not
  /// depend on time); it is still rebuilt after every mesh change.
  bool sigma_inf_constant_in_time = false;
  /// Called after every accepted step with the current space and state.
  std::function<void(const P1Space&, const StateTriple&, const StepReport&)>
      observer;
};

class DiagnosticsLedger;  // diagnostics.hpp

struct RunResult {
  Trajectory trajectory;
  std::shared_ptr<DiagnosticsLedger> ledger;
  std::shared_ptr<const P1Space> final_space;
  int total_newton_iterations = 0;
};

/// Multi-step driver: ceil(T/dt) steps with the final one shortened to land
/// on T, per-step boundary data, per-step diagnostics, and optional
/// interface-driven refinement with exact nested state transfer.
RunResult run(std::shared_ptr<const P1Space> space, const StateTriple& initial,
              const RunOptions& options, const ModelParams& params,
              const TimeFn& sigma_inf, const NewtonSettings& settings);

}  // namespace chtumor

#endif
