#ifndef CHTUMOR_EXPERIMENTS_HPP
#define CHTUMOR_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "chtumor/config.hpp"
#include "chtumor/diagnostics.hpp"
#include "chtumor/solver.hpp"

namespace chtumor {

struct SingleRunArtifacts {
  RunResult result;
  AssumptionReport assumptions;
  bool dt_star_available = false;
  DtStarResult dt_star;
  bool dt_warning = false;  // dt >= dt*
};

using StepObserver =
    std::function<void(const P1Space&, const StateTriple&, const StepReport&)>;

/// Executes one configured simulation. With write_output, emits VTK
/// snapshots, the diagnostics CSV, the assumption report and the dt* report
/// into cfg.out_dir.
SingleRunArtifacts run_single(const RunConfig& cfg, bool write_output = true,
                              const StepObserver& observer = {});

struct EocStudyResult {
  ErrorTable table;
  double eoc_of(const std::string& column) const;
  const std::vector<double>& errors_of(const std::string& column) const;
};

/// Table-1 style convergence study on the unit interval: precondition the
/// initial data on the reference grid to T_pre, interpolate onto every
/// level, run all levels and the reference to T with dt = h^2, and compare
/// the piecewise-constant-in-time extensions against the reference run.
EocStudyResult run_eoc_study(const EocStudyConfig& cfg, int threads = 1,
                             bool write_output = true);

struct StabilityReportResult {
  AssumptionReport assumptions;
  bool dt_star_available = false;
  DtStarResult dt_star;
  double ledger_aggregate = 0;
  bool pure_ch_mode = false;
  bool energy_monotone = false;
  std::string text;
};

StabilityReportResult run_stability_report(const RunConfig& cfg,
                                           bool write_output = true);

struct PerturbationStudyResult {
  double dt_bound = 0;  // continuous-dependence time-step bound
  std::vector<PerturbationRow> rows;
};

/// Paired runs with initial data phi0 and phi0 + delta*g for each delta,
/// reporting the continuous-dependence aggregate. Requires constant unit
/// mobilities and dt below the theorem bound.
PerturbationStudyResult run_perturbation(const RunConfig& cfg,
                                         const std::vector<double>& deltas,
                                         bool write_output = true);

struct MeshCheckResult {
  NonObtuseReport non_obtuse;
  double volume = 0;
  double volume_expected = 0;
  int cells = 0;
  int vertices = 0;
  std::string text;
};

MeshCheckResult run_mesh_check(const RunConfig& cfg);

}  // namespace chtumor

#endif
