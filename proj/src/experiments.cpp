#include "chtumor/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "chtumor/io.hpp"

namespace chtumor {

namespace {

TimeFn constant_supply(double value) {
  return [value](double, const std::array<double, 3>&) { return value; };
}

std::string dt_star_text(const DtStarResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << "dt* = " << r.dt_star << "\n"
     << "  candidate B/(2 c5)                       = " << r.bound_grad_phi
     << "\n"
     << "  candidate chi_sigma/(4 c4)               = " << r.bound_sigma << "\n"
     << "  candidate (A R1 - 4 chi_phi^2/chi_s)/c7  = " << r.bound_phi << "\n"
     << "  c1 = " << r.c1 << ", c2 = " << r.c2 << ", c3 = " << r.c3
     << ", c4 = " << r.c4 << "\n"
     << "  c5 = " << r.c5 << ", c6 = " << r.c6 << ", c7 = " << r.c7 << "\n";
  return os.str();
}

void write_snapshots(const std::string& dir, const Trajectory& traj) {
  int idx = 0;
  for (const auto& snap : traj.snapshots) {
    std::ostringstream name;
    name << dir << "/snapshot_" << idx++ << ".vtk";
    write_vtk(name.str(), *snap.state.mesh,
              {{"phi", &snap.state.phi},
               {"mu", &snap.state.mu},
               {"sigma", &snap.state.sigma}});
  }
}

}  // namespace

SingleRunArtifacts run_single(const RunConfig& cfg, bool write_output,
                              const StepObserver& observer) {
  cfg.params.validate();
  SingleRunArtifacts out;
  GrowthConstants growth = compute_growth_constants(cfg.params);
  out.assumptions = check_assumptions(cfg.params, growth);

  const double dt = cfg.resolved_dt();
  try {
    out.dt_star = compute_dt_star(cfg.params, growth);
    out.dt_star_available = true;
    out.dt_warning = dt >= out.dt_star.dt_star;
  } catch (const std::invalid_argument&) {
    out.dt_star_available = false;
  }

  MeshPtr mesh = cfg.mesh.build();
  auto space = std::make_shared<P1Space>(mesh);
  if (cfg.mesh.adaptive) {
    // resolve the initial interface by re-interpolating the profile on each
    // refinement pass; a transferred coarse interpolant would smear the
    // layer and over-mark
    ScalarFn phi0 = cfg.phi0();
    for (int pass = 0; pass < 40; ++pass) {
      Eigen::VectorXd phi = space->nodal_interpolate(phi0).values;
      CellMarkSet marks = mark_interface(
          *space->mesh(), {phi.data(), phi.data() + phi.size()},
          cfg.mesh.threshold);
      CellMarkSet coarse;
      for (int c : marks.marked)
        if (space->geom().cell_diameter(c) > cfg.mesh.h_min * (1.0 + 1e-12))
          coarse.marked.insert(c);
      if (coarse.marked.empty()) break;
      space = std::make_shared<P1Space>(refine(space->mesh(), coarse).mesh);
    }
  }
  StateTriple initial =
      build_initial_state(*space, cfg.phi0(), cfg.sigma0(), cfg.params);

  RunOptions opts;
  opts.T = cfg.T;
  opts.dt = dt;
  const int n_steps = static_cast<int>(std::ceil(cfg.T / dt - 1e-12));
  opts.snapshot_stride = std::max(1, n_steps / std::max(1, cfg.snapshots));
  opts.adapt.enabled = cfg.mesh.adaptive;
  opts.adapt.every = cfg.mesh.adapt_every;
  opts.adapt.threshold = cfg.mesh.threshold;
  opts.adapt.h_min = cfg.mesh.h_min;
  opts.sigma_inf_constant_in_time = true;  // the config supply is a constant
  opts.observer = observer;

  out.result = run(space, initial, opts, cfg.params,
                   constant_supply(cfg.sigma_inf), cfg.newton);

  if (write_output) {
    std::filesystem::create_directories(cfg.out_dir);
    write_snapshots(cfg.out_dir, out.result.trajectory);
    const auto& last = out.result.trajectory.snapshots.back().state;
    write_field_csv(cfg.out_dir + "/final_phi.csv", *last.mesh, last.phi);
    write_field_csv(cfg.out_dir + "/final_sigma.csv", *last.mesh, last.sigma);
    write_text_file(cfg.out_dir + "/diagnostics.csv",
                    out.result.ledger->to_csv());
    write_text_file(cfg.out_dir + "/assumption_report.txt",
                    out.assumptions.to_text());
    write_text_file(cfg.out_dir + "/assumption_report.csv",
                    out.assumptions.to_csv());
    std::ostringstream os;
    if (out.dt_star_available) {
      os << dt_star_text(out.dt_star);
      os << "dt = " << dt
         << (out.dt_warning ? "  [warning: dt >= dt*]\n" : "  [ok]\n");
    } else {
      os << "dt* unavailable: assumption (A4_3) violated\n";
    }
    write_text_file(cfg.out_dir + "/dt_star.txt", os.str());
  }
  return out;
}

double EocStudyResult::eoc_of(const std::string& column) const {
  for (const auto& c : table.columns)
    if (c.name == column) return c.orders.last;
  throw std::invalid_argument("no such error column: " + column);
}

const std::vector<double>& EocStudyResult::errors_of(
    const std::string& column) const {
  for (const auto& c : table.columns)
    if (c.name == column) return c.values;
  throw std::invalid_argument("no such error column: " + column);
}

EocStudyResult run_eoc_study(const EocStudyConfig& cfg, int threads,
                             bool write_output) {
  cfg.validate();
  cfg.params.validate();

  const int n_ref = static_cast<int>(std::llround(1.0 / cfg.h_ref));
  auto ref_space =
      std::make_shared<P1Space>(build_interval_mesh(0.0, 1.0, n_ref));
  const double dt_ref = cfg.h_ref * cfg.h_ref;

  // precondition the profiles on the reference grid up to T_pre
  const double eps = cfg.params.epsilon;
  ScalarFn phi_profile = [eps](const std::array<double, 3>& x) {
    return -std::tanh((std::abs(x[0] - 0.5) - 0.2) / (std::sqrt(2.0) * eps));
  };
  ScalarFn sigma_profile = [](const std::array<double, 3>&) { return 1.0; };
  StateTriple pre_initial =
      build_initial_state(*ref_space, phi_profile, sigma_profile, cfg.params);
  RunOptions pre_opts;
  pre_opts.T = cfg.T_pre;
  pre_opts.dt = dt_ref;
  pre_opts.snapshot_stride = std::numeric_limits<int>::max();  // first + last
  pre_opts.record_diagnostics = false;
  pre_opts.sigma_inf_constant_in_time = true;
  RunResult pre = run(ref_space, pre_initial, pre_opts, cfg.params,
                      constant_supply(1.0), cfg.newton);
  const StateTriple& seeded = pre.trajectory.snapshots.back().state;
  NodalField seeded_phi(ref_space->mesh(), seeded.phi);
  NodalField seeded_sigma(ref_space->mesh(), seeded.sigma);

  // per-level runs from the nodal interpolation of the preconditioned state
  struct Level {
    double h = 0;
    double dt = 0;
    std::shared_ptr<const P1Space> space;
    Trajectory trajectory;
  };
  std::vector<Level> levels(cfg.h_list.size());

  auto run_level = [&](std::size_t idx) {
    Level lvl;
    lvl.h = cfg.h_list[idx];
    lvl.dt = lvl.h * lvl.h;
    const int n = static_cast<int>(std::llround(1.0 / lvl.h));
    lvl.space = std::make_shared<P1Space>(build_interval_mesh(0.0, 1.0, n));
    // nested grids: nodal interpolation picks the shared vertex values
    StateTriple init;
    init.mesh = lvl.space->mesh();
    init.time = 0.0;
    init.phi = lvl.space
                   ->nodal_interpolate([&](const std::array<double, 3>& x) {
                     return ref_space->evaluate(seeded_phi, x);
                   })
                   .values;
    init.sigma = lvl.space
                     ->nodal_interpolate([&](const std::array<double, 3>& x) {
                       return ref_space->evaluate(seeded_sigma, x);
                     })
                     .values;
    init.mu =
        chemical_potential_at(*lvl.space, init.phi, init.sigma, cfg.params);
    RunOptions opts;
    opts.T = cfg.T;
    opts.dt = lvl.dt;
    opts.snapshot_stride = 1;  // the comparer needs every step
    opts.record_diagnostics = false;
    opts.sigma_inf_constant_in_time = true;
    RunResult rr = run(lvl.space, init, opts, cfg.params, constant_supply(1.0),
                       cfg.newton);
    lvl.trajectory = std::move(rr.trajectory);
    levels[idx] = std::move(lvl);
  };

  if (threads > 1) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < levels.size(); ++i)
      jobs.push_back(std::async(std::launch::async, run_level, i));
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < levels.size(); ++i) run_level(i);
  }

  // reference run, streamed through one comparer per level
  std::vector<TrajectoryComparer> comparers;
  comparers.reserve(levels.size());
  for (auto& lvl : levels)
    comparers.emplace_back(lvl.trajectory, lvl.space, ref_space);

  StateTriple ref_initial = seeded;
  ref_initial.time = 0.0;
  ref_initial.mu =
      chemical_potential_at(*ref_space, seeded.phi, seeded.sigma, cfg.params);
  RunOptions ref_opts;
  ref_opts.T = cfg.T;
  ref_opts.dt = dt_ref;
  ref_opts.snapshot_stride = std::numeric_limits<int>::max();
  ref_opts.record_diagnostics = false;
  ref_opts.sigma_inf_constant_in_time = true;
  double prev_time = 0.0;
  ref_opts.observer = [&](const P1Space&, const StateTriple& state,
                          const StepReport&) {
    double dt = state.time - prev_time;
    prev_time = state.time;
    for (auto& cmp : comparers) cmp.feed(state, dt);
  };
  run(ref_space, ref_initial, ref_opts, cfg.params, constant_supply(1.0),
      cfg.newton);

  // assemble the table
  EocStudyResult out;
  out.table.hs = cfg.h_list;
  for (const auto& lvl : levels) out.table.dts.push_back(lvl.dt);
  auto column = [&](const std::string& name, auto getter) {
    ErrorColumn col;
    col.name = name;
    for (auto& cmp : comparers) col.values.push_back(getter(cmp));
    col.orders = eoc(col.values, cfg.h_list);
    out.table.columns.push_back(std::move(col));
  };
  column("phi_linf_l2", [](const TrajectoryComparer& c) { return c.phi().linf_l2; });
  column("phi_l2_l2", [](const TrajectoryComparer& c) { return c.phi().l2_l2; });
  column("grad_phi_l2_l2", [](const TrajectoryComparer& c) { return c.phi().l2_h1; });
  column("mu_linf_l2", [](const TrajectoryComparer& c) { return c.mu().linf_l2; });
  column("mu_l2_l2", [](const TrajectoryComparer& c) { return c.mu().l2_l2; });
  column("grad_mu_l2_l2", [](const TrajectoryComparer& c) { return c.mu().l2_h1; });
  column("sigma_linf_l2", [](const TrajectoryComparer& c) { return c.sigma().linf_l2; });
  column("sigma_l2_l2", [](const TrajectoryComparer& c) { return c.sigma().l2_l2; });
  column("grad_sigma_l2_l2", [](const TrajectoryComparer& c) { return c.sigma().l2_h1; });

  for (const auto& col : out.table.columns)
    for (double e : col.values)
      if (!(e > 0))
        throw ConfigError(
            "eoc: zero error column '" + col.name +
            "' (identical levels injected?); the study needs distinct levels");

  if (write_output) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/eoc_table.csv", out.table.to_csv());
  }
  return out;
}

StabilityReportResult run_stability_report(const RunConfig& cfg,
                                           bool write_output) {
  cfg.params.validate();
  StabilityReportResult out;
  GrowthConstants growth = compute_growth_constants(cfg.params);
  out.assumptions = check_assumptions(cfg.params, growth);
  std::ostringstream os;
  os.precision(12);
  os << "== assumption report ==\n" << out.assumptions.to_text() << "\n";
  try {
    out.dt_star = compute_dt_star(cfg.params, growth);
    out.dt_star_available = true;
    os << "== time step bound ==\n" << dt_star_text(out.dt_star);
    const char* which =
        out.dt_star.dt_star == out.dt_star.bound_grad_phi ? "B/(2 c5)"
        : out.dt_star.dt_star == out.dt_star.bound_sigma
            ? "chi_sigma/(4 c4)"
            : "(A R1 - 4 chi_phi^2/chi_sigma)/c7";
    os << "  minimum attained by " << which << "\n";
  } catch (const std::invalid_argument& e) {
    out.dt_star_available = false;
    os << "== time step bound ==\n" << e.what() << "\n";
  }

  RunConfig quiet = cfg;
  SingleRunArtifacts art = run_single(quiet, false);
  out.ledger_aggregate = art.result.ledger->aggregate();
  out.pure_ch_mode = cfg.params.chi_phi == 0 && cfg.params.lambda_p == 0 &&
                     cfg.params.lambda_a == 0 && cfg.params.lambda_c == 0 &&
                     cfg.params.K == 0;
  out.energy_monotone = art.result.ledger->energy_monotone();
  os << "== simulation ==\n";
  os << "steps = " << art.result.ledger->records().size()
     << ", dt = " << cfg.resolved_dt() << "\n";
  std::vector<double> series = art.result.ledger->aggregate_series();
  os << "stability aggregate vs step:\n";
  const std::size_t stride = std::max<std::size_t>(1, series.size() / 10);
  for (std::size_t i = 0; i < series.size(); i += stride)
    os << "  step " << (i + 1) << ": " << series[i] << "\n";
  os << "stability aggregate = " << out.ledger_aggregate << "\n";
  if (out.pure_ch_mode)
    os << "pure Cahn-Hilliard mode, energy monotone: "
       << (out.energy_monotone ? "true" : "false") << "\n";
  out.text = os.str();

  if (write_output) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/stability_report.txt", out.text);
    write_text_file(cfg.out_dir + "/diagnostics.csv",
                    art.result.ledger->to_csv());
  }
  return out;
}

PerturbationStudyResult run_perturbation(const RunConfig& cfg,
                                         const std::vector<double>& deltas,
                                         bool write_output) {
  cfg.params.validate();
  if (cfg.params.M != 0.0 || cfg.params.m0 != 1.0 ||
      cfg.params.nutrient_mode != NutrientMode::Generic ||
      cfg.params.n_const != 1.0)
    throw ConfigError(
        "perturbation study requires constant unit mobilities "
        "(M = 0, m0 = 1, nutrient_mode = generic, n_const = 1)");

  GrowthConstants g = compute_growth_constants(cfg.params);
  const double A = cfg.params.A(), B = cfg.params.B();
  const double denom = 2.0 * A * A * g.L_psi1p * g.L_psi1p +
                       4.0 * cfg.params.chi_phi * cfg.params.chi_phi +
                       3.0 * B * (g.L_gamma_phi + g.L_gamma_sigma);
  PerturbationStudyResult out;
  out.dt_bound = B / denom;
  const double dt = cfg.resolved_dt();
  if (!(dt < out.dt_bound)) {
    std::ostringstream os;
    os << "perturbation study: dt = " << dt
       << " exceeds the continuous-dependence bound B/(2 A^2 L_psi1'^2 + 4 "
          "chi_phi^2 + 3 B (L_Gphi + L_Gsigma)) = "
       << out.dt_bound;
    throw ConfigError(os.str());
  }

  MeshPtr mesh = cfg.mesh.build();
  auto space = std::make_shared<P1Space>(mesh);
  // fixed smooth bump centred in the domain
  const double mid = 0.5 * (cfg.mesh.a + cfg.mesh.b);
  const double width = 0.125 * (cfg.mesh.b - cfg.mesh.a);
  ScalarFn bump = [mid, width](const std::array<double, 3>& x) {
    double t = (x[0] - mid) / width;
    return std::exp(-t * t);
  };

  RunOptions opts;
  opts.T = cfg.T;
  opts.dt = dt;
  opts.snapshot_stride = 1;
  opts.record_diagnostics = false;
  opts.sigma_inf_constant_in_time = true;

  auto simulate = [&](double delta) {
    ScalarFn base = cfg.phi0();
    ScalarFn phi0 = [base, bump, delta](const std::array<double, 3>& x) {
      return base(x) + delta * bump(x);
    };
    StateTriple init =
        build_initial_state(*space, phi0, cfg.sigma0(), cfg.params);
    return run(space, init, opts, cfg.params, constant_supply(cfg.sigma_inf),
               cfg.newton);
  };

  RunResult base_run = simulate(0.0);
  for (double delta : deltas) {
    PerturbationRow row;
    row.delta = delta;
    if (delta == 0.0) {
      row.aggregate = 0.0;
      row.aggregate_over_delta_sq = 0.0;
    } else {
      RunResult pert = simulate(delta);
      row.aggregate = continuous_dependence_aggregate(
          *space, pert.trajectory, base_run.trajectory);
      row.aggregate_over_delta_sq = row.aggregate / (delta * delta);
    }
    out.rows.push_back(row);
  }

  if (write_output) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream os;
    os.precision(17);
    os << "delta,aggregate,aggregate_over_delta_sq\n";
    for (const auto& r : out.rows)
      os << r.delta << ',' << r.aggregate << ',' << r.aggregate_over_delta_sq
         << '\n';
    write_text_file(cfg.out_dir + "/perturbation.csv", os.str());
  }
  return out;
}

MeshCheckResult run_mesh_check(const RunConfig& cfg) {
  MeshCheckResult out;
  MeshPtr mesh = cfg.mesh.build();
  out.non_obtuse = check_non_obtuse(*mesh);
  out.volume = mesh->total_volume();
  if (cfg.mesh.dim == 1) out.volume_expected = cfg.mesh.b - cfg.mesh.a;
  else if (cfg.mesh.dim == 2)
    out.volume_expected =
        (cfg.mesh.x1 - cfg.mesh.x0) * (cfg.mesh.y1 - cfg.mesh.y0);
  else
    out.volume_expected = (cfg.mesh.x1 - cfg.mesh.x0) *
                          (cfg.mesh.y1 - cfg.mesh.y0) *
                          (cfg.mesh.z1 - cfg.mesh.z0);
  out.cells = mesh->num_cells();
  out.vertices = mesh->num_vertices();
  std::ostringstream os;
  os.precision(12);
  os << "cells = " << out.cells << ", vertices = " << out.vertices << "\n"
     << "h_max = " << mesh->h_max << ", h_min = " << mesh->h_min << "\n"
     << "volume = " << out.volume << " (expected " << out.volume_expected
     << ")\n"
     << "non-obtuse: " << (out.non_obtuse.all_non_obtuse ? "true" : "false")
     << ", worst cos = " << out.non_obtuse.worst_cos << " in cell "
     << out.non_obtuse.worst_cell << "\n";
  for (const auto& [cell, cosv] : out.non_obtuse.offenders)
    os << "  obtuse cell " << cell << " (cos " << cosv << ")\n";
  out.text = os.str();
  return out;
}

}  // namespace chtumor
