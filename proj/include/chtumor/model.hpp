#ifndef CHTUMOR_MODEL_HPP
#define CHTUMOR_MODEL_HPP

#include <string>
#include <vector>

namespace chtumor {

/// Which form the nutrient equation takes: the general mobility form with
/// chi_sigma and chi_phi coefficients, or the variant with constant nutrient
/// mobility n = 1/chi_sigma where the flux reduces to grad(sigma) -
/// eta*grad(phi) with eta = chi_phi/chi_sigma.
enum class NutrientMode { Generic, ConstantInverseChiSigma };

/// Scalar model parameters. A = beta/epsilon and B = beta*epsilon.
struct ModelParams {
  double beta = 0.1;        // surface tension
  double epsilon = 0.02;    // interface width
  double chi_phi = 1.0;     // chemotaxis coefficient
  double chi_sigma = 50.0;  // nutrient diffusivity
  double K = 1.0;           // boundary permeability
  double lambda_p = 0.0;    // proliferation rate
  double lambda_a = 0.0;    // apoptosis rate
  double lambda_c = 0.0;    // consumption rate
  double M = 0.0;           // mobility shape
  double m0 = 1.0;          // mobility floor
  double trunc = 2.0;       // truncation bound for the model functions
  NutrientMode nutrient_mode = NutrientMode::ConstantInverseChiSigma;
  double n_const = 1.0;     // constant nutrient mobility in generic mode
  double C_tr = 1.0;        // trace constant entering the dt* formula
  bool energy_psi_shift = false;  // add +1/4 per unit volume to psi in F_h

  double A() const { return beta / epsilon; }
  double B() const { return beta * epsilon; }
  double eta() const { return chi_phi / chi_sigma; }
  double n_lower() const {
    return nutrient_mode == NutrientMode::Generic ? n_const : 1.0 / chi_sigma;
  }
  double n_upper() const { return n_lower(); }

  /// Throws invalid_argument on any violated structural constraint.
  void validate() const;
};

double clamp_trunc(double r, const ModelParams& p);

// Convex-concave split of the quartic potential. psi1' is r^3 on the
// truncation range and continues with constant slope 3*trunc^2 outside;
// psi2' = -r is linear already and needs no truncation.
double psi1_prime(double r, const ModelParams& p);
double psi1_second(double r, const ModelParams& p);
double psi2_prime(double r, const ModelParams& p);
/// Antiderivative of psi1' + psi2' pinned by psi(0) = 0.
double psi(double r, const ModelParams& p);

// Source terms with both arguments clamped to the truncation range.
double gamma_phi(double r, double s, const ModelParams& p);
double gamma_phi_dr(double r, double s, const ModelParams& p);
double gamma_phi_ds(double r, double s, const ModelParams& p);
double gamma_sigma(double r, double s, const ModelParams& p);
double gamma_sigma_dr(double r, double s, const ModelParams& p);
double gamma_sigma_ds(double r, double s, const ModelParams& p);

/// m(r) = (M/2)(1+r)^2 + m0 with r clamped; always >= m0.
double mobility_m(double r, const ModelParams& p);

struct GrowthConstants {
  double R0 = 0;  // source growth bound
  double R1 = 0;  // potential coercivity
  double R2 = 0;
  double R3 = 0;  // potential derivative growth
  double L_psi1p = 0;
  double L_psi2p = 0;
  double L_gamma_phi = 0;
  double L_gamma_sigma = 0;
  double C_tr = 1;
};

/// Closed-form bounds for the truncated model functions; R1, R2 come from a
/// documented grid scan of the truncated potential.
GrowthConstants compute_growth_constants(const ModelParams& p);

struct AssumptionEntry {
  std::string name;
  bool pass = true;
  double margin = 0;  // left side minus right side where applicable
  std::string message;
};

struct AssumptionReport {
  std::vector<AssumptionEntry> entries;
  bool all_pass() const;
  std::string to_text() const;
  std::string to_csv() const;
};

AssumptionReport check_assumptions(const ModelParams& p,
                                   const GrowthConstants& g);

struct DtStarResult {
  double dt_star = 0;
  double bound_grad_phi = 0;  // B / (2 c5)
  double bound_sigma = 0;     // chi_sigma / (4 c4)
  double bound_phi = 0;       // (A R1 - 4 chi_phi^2/chi_sigma) / c7
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0, c7 = 0;
};

/// Stability time-step bound dt* = min of the three candidate bounds.
/// Requires A R1 > 4 chi_phi^2 / chi_sigma.
DtStarResult compute_dt_star(const ModelParams& p, const GrowthConstants& g);

}  // namespace chtumor

#endif
