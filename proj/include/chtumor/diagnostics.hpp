#ifndef CHTUMOR_DIAGNOSTICS_HPP
#define CHTUMOR_DIAGNOSTICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "chtumor/fem.hpp"
#include "chtumor/model.hpp"
#include "chtumor/solver.hpp"

namespace chtumor {

/// Discrete free energy
///   F_h = (B/2)|grad phi|^2 + <A psi(phi) + (chi_sigma/2) sigma^2
///         + chi_phi sigma (1-phi), 1>_h.
double discrete_energy(const P1Space& space, const Eigen::VectorXd& phi,
                       const Eigen::VectorXd& sigma, const ModelParams& params);

/// One row of the stability bookkeeping mirroring the discrete energy
/// estimate: norms of the current state, increment norms against the
/// previous state, and the dt-weighted dissipation terms.
struct LedgerRecord {
  double time = 0;
  double dt = 0;
  double energy = 0;
  double phi_h_sq = 0;
  double grad_phi_sq = 0;
  double sigma_h_sq = 0;
  double inc_grad_phi_sq = 0;
  double inc_sigma_h_sq = 0;
  double mu_h_sq = 0;
  double grad_mu_sq = 0;
  double grad_sigma_sq = 0;
  double sigma_boundary_sq = 0;
  double laplace_phi_h_sq = 0;  // filled only when requested
  int newton_iterations = 0;
};

class DiagnosticsLedger {
public:
  void accumulate_step(const P1Space& space, const StateTriple& old,
                       const StateTriple& neu, double dt,
                       const ModelParams& params,
                       int newton_iterations = 0,
                       bool with_laplacian = false);

  const std::vector<LedgerRecord>& records() const { return records_; }

  /// Left-hand side of the stability estimate accumulated so far:
  /// max over steps of (|phi|_h^2 + |grad phi|^2 + |sigma|_h^2) plus the
  /// increment sums plus the dt-weighted dissipation sums.
  double aggregate() const;

  /// The same aggregate truncated after each step.
  std::vector<double> aggregate_series() const;

  double sum_inc_grad_phi() const { return sum_inc_grad_phi_; }
  double sum_inc_sigma_h() const { return sum_inc_sigma_h_; }
  double max_state_norms() const { return max_state_; }
  double sum_dt_dissipation() const { return sum_dissipation_; }

  /// True when the energy never increases by more than tol between rows.
  bool energy_monotone(double tol = 1e-10) const;

  std::string to_csv() const;

private:
  std::vector<LedgerRecord> records_;
  double sum_inc_grad_phi_ = 0;
  double sum_inc_sigma_h_ = 0;
  double max_state_ = 0;
  double sum_dissipation_ = 0;
};

enum class BochnerNorm { LinfL2, L2L2, L2H1semi };

/// Error of the piecewise-constant-in-time extension of a coarse trajectory
/// against a reference trajectory on a nested finer mesh and time grid.
/// Spatial norms are the lumped L2 norm and the exact H1 seminorm on the
/// reference mesh; time integration uses the reference steps, which is exact
/// for the piecewise-constant extensions.
double bochner_error(const Trajectory& coarse, const Trajectory& reference,
                     BochnerNorm norm,
                     const Eigen::VectorXd StateTriple::*component);

/// Streaming form used by the convergence study: feed reference states in
/// time order, one comparer per coarse level.
class TrajectoryComparer {
public:
  TrajectoryComparer(const Trajectory& coarse,
                     std::shared_ptr<const P1Space> coarse_space,
                     std::shared_ptr<const P1Space> reference_space);

  /// Advances to reference time t (strictly increasing calls) and folds the
  /// state into the error accumulators. dt is the reference interval length.
  void feed(const StateTriple& reference_state, double dt);

  struct Errors {
    double linf_l2 = 0, l2_l2 = 0, l2_h1 = 0;
  };
  Errors phi() const;
  Errors mu() const;
  Errors sigma() const;

private:
  const Trajectory& coarse_;
  std::shared_ptr<const P1Space> coarse_space_;
  std::shared_ptr<const P1Space> ref_space_;
  SparseMat prolong_;
  std::size_t cursor_ = 0;

  struct Acc {
    double linf_sq = 0, l2_sq = 0, h1_sq = 0;
  };
  Acc phi_, mu_, sigma_;

  void fold(Acc& acc, const Eigen::VectorXd& coarse_vals,
            const Eigen::VectorXd& ref_vals, double dt);
};

struct EocResult {
  double last = 0;                  // EOC of the final pair
  std::vector<double> per_pair;     // one entry per consecutive pair
};

/// Experimental order of convergence log(e_{k-1}/e_k) / log(h_{k-1}/h_k).
EocResult eoc(const std::vector<double>& errors, const std::vector<double>& hs);

/// One variable column group of the convergence table.
struct ErrorColumn {
  std::string name;
  std::vector<double> values;
  EocResult orders;
};

struct ErrorTable {
  std::vector<double> hs;
  std::vector<double> dts;
  std::vector<ErrorColumn> columns;
  std::string to_csv() const;
};

/// Left-hand side aggregate of the continuous-dependence estimate for a pair
/// of trajectories on a shared mesh and time grid.
double continuous_dependence_aggregate(const P1Space& space,
                                       const Trajectory& a,
                                       const Trajectory& b);

struct PerturbationRow {
  double delta = 0;
  double aggregate = 0;
  double aggregate_over_delta_sq = 0;
};

struct HigherOrderLedger {
  double dt_sum_laplace_h_sq = 0;           // dt * sum |Delta_h phi^n|_h^2
  double dt_sum_laplace_h_sq_interior = 0;  // same, interior vertices only
  std::vector<std::pair<int, double>> translation_ratios;  // (l, sum/(l dt))
};

/// Higher-order bookkeeping: the dt-weighted discrete-Laplacian sum (full
/// and restricted to interior vertices) and the time-translation sums
/// dt*sum |phi^{n+l} - phi^n|_h^2 / (l dt) for l in {1,2,4}.
HigherOrderLedger higher_order_ledger(const P1Space& space,
                                      const Trajectory& traj, double dt);

struct InterfaceRadiusRange {
  double r_min = 0, r_max = 0;
  int crossings = 0;
  double ratio() const { return r_min > 0 ? r_max / r_min : 0.0; }
};

/// Radii of the phi = 0 level set: edges with a sign change contribute the
/// distance of the linearly interpolated crossing from the origin.
InterfaceRadiusRange interface_radius_range(const P1Space& space,
                                            const Eigen::VectorXd& phi);

}  // namespace chtumor

#endif
