#include "chtumor/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chtumor {

namespace {
constexpr double kRateFloor = 1e-12;
}

void ModelParams::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("ModelParams: " + msg);
  };
  if (!(beta > 0)) fail("beta must be > 0");
  if (!(epsilon > 0)) fail("epsilon must be > 0");
  if (!(chi_phi >= 0)) fail("chi_phi must be >= 0");
  if (!(chi_sigma > 0)) fail("chi_sigma must be > 0");
  if (!(K >= 0)) fail("K must be >= 0");
  if (!(lambda_p >= 0) || !(lambda_a >= 0) || !(lambda_c >= 0))
    fail("rates must be >= 0");
  if (!(M >= 0)) fail("M must be >= 0");
  if (!(m0 > 0)) fail("m0 must be > 0 (mobility floor, assumption (A3))");
  if (!(trunc > 0)) fail("trunc must be > 0");
  if (nutrient_mode == NutrientMode::Generic && !(n_const > 0))
    fail("n_const must be > 0 (assumption (A3))");
  if (!(C_tr > 0)) fail("C_tr must be > 0");
}

double clamp_trunc(double r, const ModelParams& p) {
  return std::clamp(r, -p.trunc, p.trunc);
}

double psi1_prime(double r, const ModelParams& p) {
  const double t = p.trunc;
  if (r > t) return t * t * t + 3.0 * t * t * (r - t);
  if (r < -t) return -t * t * t + 3.0 * t * t * (r + t);
  return r * r * r;
}

double psi1_second(double r, const ModelParams& p) {
  const double t = p.trunc;
  if (std::abs(r) >= t) return 3.0 * t * t;
  return 3.0 * r * r;
}

double psi2_prime(double r, const ModelParams&) { return -r; }

double psi(double r, const ModelParams& p) {
  const double t = p.trunc;
  const double a = std::abs(r);
  if (a <= t) return 0.25 * r * r * r * r - 0.5 * r * r;
  // continue past the truncation with the integrated linear extension
  const double psi_t = 0.25 * t * t * t * t - 0.5 * t * t;
  const double d = a - t;
  return psi_t + (t * t * t - t) * d + 0.5 * (3.0 * t * t - 1.0) * d * d;
}

double gamma_phi(double r, double s, const ModelParams& p) {
  return 0.5 * (p.lambda_p * clamp_trunc(s, p) - p.lambda_a) *
         (1.0 + clamp_trunc(r, p));
}

double gamma_phi_dr(double r, double s, const ModelParams& p) {
  if (std::abs(r) >= p.trunc) return 0.0;
  return 0.5 * (p.lambda_p * clamp_trunc(s, p) - p.lambda_a);
}

double gamma_phi_ds(double r, double s, const ModelParams& p) {
  if (std::abs(s) >= p.trunc) return 0.0;
  return 0.5 * p.lambda_p * (1.0 + clamp_trunc(r, p));
}

double gamma_sigma(double r, double s, const ModelParams& p) {
  return 0.5 * p.lambda_c * clamp_trunc(s, p) * (1.0 + clamp_trunc(r, p));
}

double gamma_sigma_dr(double r, double s, const ModelParams& p) {
  if (std::abs(r) >= p.trunc) return 0.0;
  return 0.5 * p.lambda_c * clamp_trunc(s, p);
}

double gamma_sigma_ds(double r, double s, const ModelParams& p) {
  if (std::abs(s) >= p.trunc) return 0.0;
  return 0.5 * p.lambda_c * (1.0 + clamp_trunc(r, p));
}

double mobility_m(double r, const ModelParams& p) {
  const double rc = clamp_trunc(r, p);
  return 0.5 * p.M * (1.0 + rc) * (1.0 + rc) + p.m0;
}

GrowthConstants compute_growth_constants(const ModelParams& p) {
  GrowthConstants g;
  const double t = p.trunc;
  g.C_tr = p.C_tr;

  // R0: smallest constant with |Gamma_i(r,s)| <= R0 (1+|r|+|s|). Both
  // sources are piecewise linear over constant in each argument, so the
  // supremum of the ratio sits at one of the clamp corners or at s = 0.
  double r0_phi = 0.0;
  {
    const double front = 0.5 * (1.0 + t);
    double c0 = p.lambda_a / (1.0 + t);                        // s = 0
    double cm = (p.lambda_p * t + p.lambda_a) / (1.0 + 2 * t); // s = -t
    double cp = std::abs(p.lambda_p * t - p.lambda_a) / (1.0 + 2 * t);
    r0_phi = front * std::max({c0, cm, cp});
  }
  double r0_sigma = 0.5 * p.lambda_c * (1.0 + t) * t / (1.0 + 2 * t);
  g.R0 = std::max({r0_phi, r0_sigma, kRateFloor});

  // R3: |psi_i'(r)| <= R3 (1+|r|); the truncated cubic approaches slope
  // 3 t^2, psi2' approaches 1.
  g.R3 = std::max({3.0 * t * t, t * t * t / (1.0 + t), 1.0});

  g.L_psi1p = 3.0 * t * t;
  g.L_psi2p = 1.0;
  g.L_gamma_phi = std::max(0.5 * (p.lambda_p * t + p.lambda_a),
                           0.5 * p.lambda_p * (1.0 + t));
  g.L_gamma_sigma = std::max(0.5 * p.lambda_c * t, 0.5 * p.lambda_c * (1.0 + t));

  // R1, R2: grid scan of the truncated psi over [-10t, 10t]. The largest
  // admissible R1 is the largest candidate for which R1 r^2 - psi(r) peaks
  // strictly inside the window; past that peak psi outgrows the parabola.
  {
    const double lim = 10.0 * t;
    const int n = 20001;
    std::vector<double> rs(n), ps(n);
    for (int i = 0; i < n; ++i) {
      rs[i] = -lim + 2.0 * lim * i / (n - 1);
      ps[i] = psi(rs[i], p);
    }
    const double a_inf = 0.5 * (3.0 * t * t - 1.0);  // asymptotic coefficient
    double r1 = kRateFloor, r2 = kRateFloor;
    if (a_inf > 0) {
      for (int k = 999; k >= 1; --k) {
        double cand = a_inf * k / 1000.0;
        int argmax = 0;
        double best = -std::numeric_limits<double>::max();
        for (int i = 0; i < n; ++i) {
          double v = cand * rs[i] * rs[i] - ps[i];
          if (v > best) {
            best = v;
            argmax = i;
          }
        }
        if (argmax > 2 && argmax < n - 3) {
          r1 = cand;
          // the grid maximum can undershoot the true one by at most
          // max|f''| (step/2)^2 / 2 for f = R1 t^2 - psi
          const double step = 2.0 * lim / (n - 1);
          const double curvature = 2.0 * cand + 3.0 * t * t + 1.0;
          r2 = std::max(best + 0.125 * curvature * step * step, kRateFloor);
          break;
        }
      }
    }
    g.R1 = r1;
    g.R2 = r2;
  }
  return g;
}

bool AssumptionReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

std::string AssumptionReport::to_text() const {
  std::ostringstream os;
  for (const auto& e : entries)
    os << (e.pass ? "[pass] " : "[FAIL] ") << e.name << ": " << e.message
       << "\n";
  return os.str();
}

std::string AssumptionReport::to_csv() const {
  std::ostringstream os;
  os << "assumption,pass,margin,message\n";
  for (const auto& e : entries)
    os << e.name << ',' << (e.pass ? 1 : 0) << ',' << e.margin << ",\""
       << e.message << "\"\n";
  return os.str();
}

AssumptionReport check_assumptions(const ModelParams& p,
                                   const GrowthConstants& g) {
  AssumptionReport rep;
  auto add = [&rep](const std::string& name, bool pass, double margin,
                    const std::string& msg) {
    rep.entries.push_back({name, pass, margin, msg});
  };

  {
    std::ostringstream os;
    bool ok = p.chi_phi >= 0 && p.chi_sigma > 0 && p.A() > 0 && p.B() > 0 &&
              p.K >= 0;
    os << "chi_phi=" << p.chi_phi << ", chi_sigma=" << p.chi_sigma
       << ", A=" << p.A() << ", B=" << p.B() << ", K=" << p.K;
    add("A1", ok, 0, os.str());
  }
  {
    std::ostringstream os;
    os << "sources have linear growth with R0=" << g.R0;
    add("A2", true, g.R0, os.str());
  }
  {
    bool ok = p.m0 > 0 && p.n_lower() > 0;
    std::ostringstream os;
    os << "m in [" << p.m0 << ", " << mobility_m(p.trunc, p) << "], n = "
       << p.n_lower();
    add("A3", ok, p.m0, os.str());
  }
  {
    bool ok = g.R1 > kRateFloor;
    std::ostringstream os;
    os << "psi coercive with R1=" << g.R1 << ", R2=" << g.R2
       << ", R3=" << g.R3;
    add("A4_coercivity", ok, g.R1, os.str());
  }
  {
    double lhs = p.A();
    double rhs = 4.0 * p.chi_phi * p.chi_phi / (p.chi_sigma * g.R1);
    std::ostringstream os;
    os << "A=" << lhs << " vs 4 chi_phi^2/(chi_sigma R1)=" << rhs;
    add("A4_3", lhs > rhs, lhs - rhs, os.str());
  }
  return rep;
}

DtStarResult compute_dt_star(const ModelParams& p, const GrowthConstants& g) {
  const double A = p.A(), B = p.B();
  const double gap = A * g.R1 - 4.0 * p.chi_phi * p.chi_phi / p.chi_sigma;
  if (!(gap > 0))
    throw std::invalid_argument(
        "compute_dt_star: assumption (A4_3) violated, "
        "A R1 - 4 chi_phi^2 / chi_sigma must be positive");
  DtStarResult r;
  const double ctr2 = g.C_tr * g.C_tr;
  const double robin = p.K * ctr2 *
                       (p.chi_phi * p.chi_phi / (2.0 * p.chi_sigma) + 1.0);
  r.c1 = 0.5 * p.m0;
  r.c2 = 0.5 * p.n_lower() * p.chi_sigma * p.chi_sigma;
  r.c3 = 0.25 * p.K * p.chi_sigma;
  r.c4 = 3.0 * g.R0 * g.R0 + 1.5 * p.chi_sigma * p.chi_sigma +
         4.0 * p.chi_phi * p.chi_phi;
  r.c5 = 2.0 * B * B / p.m0 + robin + p.n_lower() * p.chi_phi * p.chi_phi;
  r.c6 = 4.0 * A * A * g.R3 * g.R3;
  r.c7 = 4.0 * A * A * g.R3 * g.R3 + 3.0 * g.R0 * g.R0 +
         1.5 * p.chi_phi * p.chi_phi + robin;
  r.bound_grad_phi = B / (2.0 * r.c5);
  r.bound_sigma = p.chi_sigma / (4.0 * r.c4);
  r.bound_phi = gap / r.c7;
  r.dt_star = std::min({r.bound_grad_phi, r.bound_sigma, r.bound_phi});
  return r;
}

}  // namespace chtumor
