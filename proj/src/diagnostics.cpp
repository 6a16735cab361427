#include "chtumor/diagnostics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chtumor {

double discrete_energy(const P1Space& space, const Eigen::VectorXd& phi,
                       const Eigen::VectorXd& sigma,
                       const ModelParams& params) {
  if (phi.size() != space.size() || sigma.size() != space.size())
    throw std::invalid_argument("discrete_energy: field size mismatch");
  NodalField phi_f(space.mesh(), phi);
  double grad = space.seminorm_H1(phi_f);
  double lumped = 0.0;
  const double shift = params.energy_psi_shift ? 0.25 : 0.0;
  const auto& m = space.mass().diagonal;
  for (int p = 0; p < space.size(); ++p) {
    double integrand = params.A() * (psi(phi[p], params) + shift) +
                       0.5 * params.chi_sigma * sigma[p] * sigma[p] +
                       params.chi_phi * sigma[p] * (1.0 - phi[p]);
    lumped += m[p] * integrand;
  }
  return 0.5 * params.B() * grad * grad + lumped;
}

void DiagnosticsLedger::accumulate_step(const P1Space& space,
                                        const StateTriple& old,
                                        const StateTriple& neu, double dt,
                                        const ModelParams& params,
                                        int newton_iterations,
                                        bool with_laplacian) {
  if (old.mesh.get() != neu.mesh.get() ||
      old.mesh.get() != space.mesh().get())
    throw std::invalid_argument(
        "DiagnosticsLedger: states live on different meshes; transfer first");
  LedgerRecord rec;
  rec.time = neu.time;
  rec.dt = dt;
  rec.newton_iterations = newton_iterations;
  rec.energy = discrete_energy(space, neu.phi, neu.sigma, params);

  NodalField phi(space.mesh(), neu.phi), mu(space.mesh(), neu.mu),
      sigma(space.mesh(), neu.sigma);
  NodalField dphi(space.mesh(), neu.phi - old.phi);
  NodalField dsigma(space.mesh(), neu.sigma - old.sigma);

  rec.phi_h_sq = space.lumped_inner(phi, phi);
  rec.sigma_h_sq = space.lumped_inner(sigma, sigma);
  double g = space.seminorm_H1(phi);
  rec.grad_phi_sq = g * g;
  g = space.seminorm_H1(dphi);
  rec.inc_grad_phi_sq = g * g;
  rec.inc_sigma_h_sq = space.lumped_inner(dsigma, dsigma);
  rec.mu_h_sq = space.lumped_inner(mu, mu);
  g = space.seminorm_H1(mu);
  rec.grad_mu_sq = g * g;
  g = space.seminorm_H1(sigma);
  rec.grad_sigma_sq = g * g;
  g = space.norm_boundary_h(sigma, BoundaryFilter::Robin);
  rec.sigma_boundary_sq = g * g;
  if (with_laplacian) {
    NodalField lap = space.discrete_laplacian(phi);
    rec.laplace_phi_h_sq = space.lumped_inner(lap, lap);
  }

  sum_inc_grad_phi_ += rec.inc_grad_phi_sq;
  sum_inc_sigma_h_ += rec.inc_sigma_h_sq;
  max_state_ =
      std::max(max_state_, rec.phi_h_sq + rec.grad_phi_sq + rec.sigma_h_sq);
  sum_dissipation_ += dt * (rec.mu_h_sq + rec.grad_mu_sq + rec.grad_sigma_sq +
                            rec.sigma_boundary_sq);
  records_.push_back(rec);
}

double DiagnosticsLedger::aggregate() const {
  return max_state_ + sum_inc_grad_phi_ + sum_inc_sigma_h_ + sum_dissipation_;
}

std::vector<double> DiagnosticsLedger::aggregate_series() const {
  std::vector<double> out;
  out.reserve(records_.size());
  double max_state = 0, incs = 0, diss = 0;
  for (const auto& r : records_) {
    max_state = std::max(max_state, r.phi_h_sq + r.grad_phi_sq + r.sigma_h_sq);
    incs += r.inc_grad_phi_sq + r.inc_sigma_h_sq;
    diss += r.dt * (r.mu_h_sq + r.grad_mu_sq + r.grad_sigma_sq +
                    r.sigma_boundary_sq);
    out.push_back(max_state + incs + diss);
  }
  return out;
}

bool DiagnosticsLedger::energy_monotone(double tol) const {
  for (std::size_t i = 1; i < records_.size(); ++i)
    if (records_[i].energy > records_[i - 1].energy + tol) return false;
  return true;
}

std::string DiagnosticsLedger::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "time,dt,energy,phi_h_sq,grad_phi_sq,sigma_h_sq,inc_grad_phi_sq,"
        "inc_sigma_h_sq,mu_h_sq,grad_mu_sq,grad_sigma_sq,sigma_boundary_sq,"
        "laplace_phi_h_sq,newton_iterations\n";
  for (const auto& r : records_)
    os << r.time << ',' << r.dt << ',' << r.energy << ',' << r.phi_h_sq << ','
       << r.grad_phi_sq << ',' << r.sigma_h_sq << ',' << r.inc_grad_phi_sq
       << ',' << r.inc_sigma_h_sq << ',' << r.mu_h_sq << ',' << r.grad_mu_sq
       << ',' << r.grad_sigma_sq << ',' << r.sigma_boundary_sq << ','
       << r.laplace_phi_h_sq << ',' << r.newton_iterations << '\n';
  return os.str();
}

TrajectoryComparer::TrajectoryComparer(
    const Trajectory& coarse, std::shared_ptr<const P1Space> coarse_space,
    std::shared_ptr<const P1Space> reference_space)
    : coarse_(coarse), coarse_space_(std::move(coarse_space)),
      ref_space_(std::move(reference_space)) {
  if (coarse_.snapshots.empty())
    throw std::invalid_argument("TrajectoryComparer: empty coarse trajectory");
  for (const auto& snap : coarse_.snapshots)
    if (snap.state.mesh.get() != coarse_space_->mesh().get())
      throw std::invalid_argument(
          "TrajectoryComparer: coarse trajectory changed meshes");
  prolong_ = coarse_space_->prolongation_to(*ref_space_);
}

void TrajectoryComparer::fold(Acc& acc, const Eigen::VectorXd& coarse_vals,
                              const Eigen::VectorXd& ref_vals, double dt) {
  Eigen::VectorXd diff = prolong_ * coarse_vals - ref_vals;
  NodalField d(ref_space_->mesh(), std::move(diff));
  double n = ref_space_->norm_h(d);
  double l2_sq = n * n;
  acc.linf_sq = std::max(acc.linf_sq, l2_sq);
  acc.l2_sq += dt * l2_sq;
  double h1 = ref_space_->seminorm_H1(d);
  acc.h1_sq += dt * h1 * h1;
}

void TrajectoryComparer::feed(const StateTriple& reference_state, double dt) {
  const double t = reference_state.time;
  // forward the cursor to the first coarse snapshot with time >= t; the
  // piecewise-constant-in-time extension takes the right-endpoint value
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  while (cursor_ + 1 < coarse_.snapshots.size() &&
         coarse_.snapshots[cursor_].state.time < t - tol)
    ++cursor_;
  const auto& snap = coarse_.snapshots[cursor_];
  if (snap.state.time < t - tol)
    throw std::invalid_argument(
        "TrajectoryComparer: coarse trajectory ends before reference time");
  fold(phi_, snap.state.phi, reference_state.phi, dt);
  fold(mu_, snap.state.mu, reference_state.mu, dt);
  fold(sigma_, snap.state.sigma, reference_state.sigma, dt);
}

TrajectoryComparer::Errors TrajectoryComparer::phi() const {
  return {std::sqrt(phi_.linf_sq), std::sqrt(phi_.l2_sq),
          std::sqrt(phi_.h1_sq)};
}
TrajectoryComparer::Errors TrajectoryComparer::mu() const {
  return {std::sqrt(mu_.linf_sq), std::sqrt(mu_.l2_sq), std::sqrt(mu_.h1_sq)};
}
TrajectoryComparer::Errors TrajectoryComparer::sigma() const {
  return {std::sqrt(sigma_.linf_sq), std::sqrt(sigma_.l2_sq),
          std::sqrt(sigma_.h1_sq)};
}

double bochner_error(const Trajectory& coarse, const Trajectory& reference,
                     BochnerNorm norm,
                     const Eigen::VectorXd StateTriple::*component) {
  if (coarse.snapshots.empty() || reference.snapshots.empty())
    throw std::invalid_argument("bochner_error: empty trajectory");
  if (reference.dt_nominal > 0 && coarse.dt_nominal > 0) {
    double ratio = coarse.dt_nominal / reference.dt_nominal;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw std::invalid_argument(
          "bochner_error: coarse dt must be an integer multiple of the "
          "reference dt");
  }
  auto coarse_space =
      std::make_shared<P1Space>(coarse.snapshots.front().state.mesh);
  auto ref_space =
      std::make_shared<P1Space>(reference.snapshots.front().state.mesh);
  TrajectoryComparer cmp(coarse, coarse_space, ref_space);
  for (std::size_t i = 1; i < reference.snapshots.size(); ++i) {
    double dt = reference.snapshots[i].state.time -
                reference.snapshots[i - 1].state.time;
    cmp.feed(reference.snapshots[i].state, dt);
  }
  TrajectoryComparer::Errors e;
  if (component == &StateTriple::phi) e = cmp.phi();
  else if (component == &StateTriple::mu) e = cmp.mu();
  else e = cmp.sigma();
  switch (norm) {
    case BochnerNorm::LinfL2: return e.linf_l2;
    case BochnerNorm::L2L2: return e.l2_l2;
    default: return e.l2_h1;
  }
}

EocResult eoc(const std::vector<double>& errors,
              const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw std::invalid_argument("eoc: need matching lists of length >= 2");
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (!(hs[i] < hs[i - 1]))
      throw std::invalid_argument("eoc: hs must be strictly decreasing");
  for (double e : errors)
    if (!(e > 0)) throw std::invalid_argument("eoc: errors must be positive");
  EocResult r;
  for (std::size_t i = 1; i < errors.size(); ++i)
    r.per_pair.push_back(std::log(errors[i - 1] / errors[i]) /
                         std::log(hs[i - 1] / hs[i]));
  r.last = r.per_pair.back();
  return r;
}

std::string ErrorTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "h,dt";
  for (const auto& c : columns) os << ',' << c.name;
  os << '\n';
  for (std::size_t i = 0; i < hs.size(); ++i) {
    os << hs[i] << ',' << dts[i];
    for (const auto& c : columns) os << ',' << c.values[i];
    os << '\n';
  }
  os << "EOC,";
  for (const auto& c : columns) os << ',' << c.orders.last;
  os << '\n';
  return os.str();
}

double continuous_dependence_aggregate(const P1Space& space,
                                       const Trajectory& a,
                                       const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size())
    throw std::invalid_argument(
        "continuous_dependence_aggregate: trajectories differ in length");
  double max_state = 0, inc_sum = 0, diss_sum = 0;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    const auto& sa = a.snapshots[i].state;
    const auto& sb = b.snapshots[i].state;
    if (sa.mesh.get() != space.mesh().get() ||
        sb.mesh.get() != space.mesh().get())
      throw std::invalid_argument(
          "continuous_dependence_aggregate: mesh mismatch");
    NodalField dphi(space.mesh(), sa.phi - sb.phi);
    NodalField dsigma(space.mesh(), sa.sigma - sb.sigma);
    double phi_sq = space.lumped_inner(dphi, dphi);
    double sigma_sq = space.lumped_inner(dsigma, dsigma);
    if (i > 0) max_state = std::max(max_state, phi_sq + sigma_sq);
    if (i > 0) {
      const auto& pa = a.snapshots[i - 1].state;
      const auto& pb = b.snapshots[i - 1].state;
      double dt = sa.time - pa.time;
      NodalField inc_phi(space.mesh(),
                         (sa.phi - sb.phi) - (pa.phi - pb.phi));
      NodalField inc_sigma(space.mesh(),
                           (sa.sigma - sb.sigma) - (pa.sigma - pb.sigma));
      inc_sum += space.lumped_inner(inc_phi, inc_phi) +
                 space.lumped_inner(inc_sigma, inc_sigma);
      NodalField dmu(space.mesh(), sa.mu - sb.mu);
      double h1 = space.seminorm_H1(dsigma);
      double bd = space.norm_boundary_h(dsigma, BoundaryFilter::Robin);
      diss_sum += dt * (space.lumped_inner(dmu, dmu) + h1 * h1 + bd * bd);
    }
  }
  return max_state + inc_sum + diss_sum;
}

HigherOrderLedger higher_order_ledger(const P1Space& space,
                                      const Trajectory& traj, double dt) {
  HigherOrderLedger out;
  const auto& snaps = traj.snapshots;
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    if (snaps[i].state.mesh.get() != space.mesh().get())
      throw std::invalid_argument("higher_order_ledger: mesh changed");
    NodalField phi(space.mesh(), snaps[i].state.phi);
    NodalField lap = space.discrete_laplacian(phi);
    out.dt_sum_laplace_h_sq += dt * space.lumped_inner(lap, lap);
    double interior = 0;
    for (int p = 0; p < space.size(); ++p)
      if (!space.geom().is_boundary_vertex(p))
        interior += space.mass().diagonal[p] * lap.values[p] * lap.values[p];
    out.dt_sum_laplace_h_sq_interior += dt * interior;
  }
  for (int l : {1, 2, 4}) {
    if (static_cast<int>(snaps.size()) <= l) break;
    double sum = 0;
    for (std::size_t n = 0; n + l < snaps.size(); ++n) {
      NodalField diff(space.mesh(),
                      snaps[n + l].state.phi - snaps[n].state.phi);
      sum += dt * space.lumped_inner(diff, diff);
    }
    out.translation_ratios.emplace_back(l, sum / (l * dt));
  }
  return out;
}

InterfaceRadiusRange interface_radius_range(const P1Space& space,
                                            const Eigen::VectorXd& phi) {
  InterfaceRadiusRange out;
  out.r_min = std::numeric_limits<double>::max();
  out.r_max = 0;
  const auto& mesh = space.geom();
  std::set<std::pair<int, int>> seen;
  auto radius = [&mesh](int a, int b, double pa, double pb) {
    double w = pa / (pa - pb);
    double r2 = 0;
    for (int k = 0; k < 3; ++k) {
      double x = mesh.vertices[a][k] + w * (mesh.vertices[b][k] -
                                            mesh.vertices[a][k]);
      r2 += x * x;
    }
    return std::sqrt(r2);
  };
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i <= mesh.dim; ++i)
      for (int j = i + 1; j <= mesh.dim; ++j) {
        int a = mesh.cells[c][i], b = mesh.cells[c][j];
        std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        if (!seen.insert(key).second) continue;
        double pa = phi[a], pb = phi[b];
        if (pa == 0.0) {
          double r = std::hypot(mesh.vertices[a][0], mesh.vertices[a][1],
                                mesh.vertices[a][2]);
          out.r_min = std::min(out.r_min, r);
          out.r_max = std::max(out.r_max, r);
          ++out.crossings;
        } else if (pa * pb < 0.0) {
          double r = radius(a, b, pa, pb);
          out.r_min = std::min(out.r_min, r);
          out.r_max = std::max(out.r_max, r);
          ++out.crossings;
        }
      }
  if (out.crossings == 0) out.r_min = 0;
  return out;
}

}  // namespace chtumor
