#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "chtumor/experiments.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitAssumptionViolation = 4;

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const chtumor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const chtumor::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return kExitAssumptionViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard tumour growth solver with mass lumping"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool quick = false;
  int threads = 1;
  std::vector<double> deltas{1e-2, 1e-3};

  auto add_common = [&](CLI::App* cmd, bool with_quick = false) {
    cmd->add_option("--config", config_path, "configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--threads", threads, "parallel jobs for level runs");
    if (with_quick)
      cmd->add_flag("--quick", quick, "coarser reference, fewer levels");
  };

  auto* cmd_run = app.add_subcommand("run", "single configured simulation");
  add_common(cmd_run);
  auto* cmd_eoc =
      app.add_subcommand("eoc", "convergence study against a fine reference");
  add_common(cmd_eoc, true);
  auto* cmd_stab = app.add_subcommand(
      "stability-report", "time-step bound, constants and energy ledger");
  add_common(cmd_stab);
  auto* cmd_perturb = app.add_subcommand(
      "perturb", "continuous dependence on perturbed initial data");
  add_common(cmd_perturb);
  cmd_perturb->add_option("--delta", deltas, "perturbation sizes");
  auto* cmd_mesh = app.add_subcommand("mesh-check", "mesh quality report");
  add_common(cmd_mesh);

  CLI11_PARSE(app, argc, argv);

  using namespace chtumor;

  if (cmd_run->parsed()) {
    return guarded([&] {
      RunConfig cfg = RunConfig::from_file(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      SingleRunArtifacts art = run_single(cfg, true);
      if (art.dt_warning)
        std::cerr << "warning: dt = " << cfg.resolved_dt()
                  << " >= dt* = " << art.dt_star.dt_star << "\n";
      std::cout << "completed " << art.result.ledger->records().size()
                << " steps, artifacts in " << cfg.out_dir << "\n";
      return 0;
    });
  }
  if (cmd_eoc->parsed()) {
    return guarded([&] {
      EocStudyConfig cfg = EocStudyConfig::from_file(config_path, quick);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      EocStudyResult res = run_eoc_study(cfg, threads, true);
      std::cout << res.table.to_csv();
      return 0;
    });
  }
  if (cmd_stab->parsed()) {
    return guarded([&] {
      RunConfig cfg = RunConfig::from_file(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      StabilityReportResult res = run_stability_report(cfg, true);
      std::cout << res.text;
      return 0;
    });
  }
  if (cmd_perturb->parsed()) {
    return guarded([&] {
      RunConfig cfg = RunConfig::from_file(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      PerturbationStudyResult res = run_perturbation(cfg, deltas, true);
      std::cout << "delta,aggregate,aggregate_over_delta_sq\n";
      for (const auto& r : res.rows)
        std::cout << r.delta << ',' << r.aggregate << ','
                  << r.aggregate_over_delta_sq << '\n';
      return 0;
    });
  }
  return guarded([&] {
    RunConfig cfg = RunConfig::from_file(config_path);
    MeshCheckResult res = run_mesh_check(cfg);
    std::cout << res.text;
    return res.non_obtuse.all_non_obtuse ? 0 : 1;
  });
}
