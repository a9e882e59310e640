#pragma once

#include <optional>
#include <string>

#include "snm/rng.hpp"

namespace snm {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.0;

  // Throws std::invalid_argument unless epsilon > 0 and 0 <= delta < 1.
  void validate() const;
};

enum class NoiseKind { kLaplace, kStudentT, kLaplaceLogNormal, kGumbel, kExponential };

std::string noise_kind_name(NoiseKind kind);

// A noise distribution in standard (unit) shape together with the sliding
// radius alpha and dilation exponent beta it was calibrated for. Every scale
// factor (2S/alpha, 2*delta_u/epsilon, ...) is applied by the mechanism
// layer, never here, so one object serves both the sampler and the
// probability engine.
//
// Instances are immutable after construction and safe to share across
// threads; random state always lives in the caller's Rng.
struct CalibratedNoise {
  NoiseKind kind = NoiseKind::kLaplace;
  double alpha = 0.0;   // sliding radius (> 0 when calibrated for selection)
  double beta = 0.0;    // dilation / smoothing exponent
  int dof = 0;          // Student's T degrees of freedom
  double sigma = 0.0;   // Laplace Log-Normal parameter

  double pdf(double z) const;
  double cdf(double z) const;
  double sample(Rng& rng) const;

  // Variance of the standard shape (Laplace 2, Student's T d/(d-2),
  // LLN 2*exp(2*sigma^2), Gumbel pi^2/6, Exponential 1).
  double variance() const;

  // Half-width of the truncated support used by the numeric checks and the
  // probability quadrature; the mass outside is below 1e-9 (Student's T(3)
  // leaves ~2e-12 which the callers fold into their tolerances).
  double truncation_halfwidth() const;
};

// beta = eps / (2 ln(2/delta)), alpha = eps / 2. Requires delta > 0; the
// Laplace-noise variant only gives approximate differential privacy.
CalibratedNoise calibrate_laplace(const PrivacyBudget& budget);

// Pure-DP calibration for Student's T with d >= 3 degrees of freedom.
// Defaults alpha = eps/2, beta = eps/(2(d+1)); both can be overridden, and
// admissibility_spot_check exists to vet whatever values end up configured.
CalibratedNoise calibrate_student_t(const PrivacyBudget& budget, int dof,
                                    std::optional<double> alpha_override = {},
                                    std::optional<double> beta_override = {});

// Laplace Log-Normal with parameter sigma: alpha = exp(-1.5 sigma^2) *
// (eps - beta/sigma), beta defaulting to sigma*eps/2. Requires delta > 0 and
// beta < sigma*eps (alpha must stay positive).
CalibratedNoise calibrate_lln(const PrivacyBudget& budget, double sigma,
                              std::optional<double> beta_override = {});

// Standard shape with no admissibility calibration, for the report-noisy-max
// baselines (Laplace, Gumbel, Exponential).
CalibratedNoise standard_noise(NoiseKind kind, int dof = 3, double sigma = 1.0);

// Numeric check of the sliding and dilation conditions over a grid of
// interval/shift pairs, evaluated with the exact CDF:
//   Pr[Z in S] <= e^{eps/2} Pr[Z in S + delta] + delta_budget/2    |shift| <= alpha
//   Pr[Z in S] <= e^{eps/2} Pr[Z in S * e^l]   + delta_budget/2    |l| <= beta
// This is a falsifier for calibration overrides, not a proof.
struct AdmissibilityReport {
  int sliding_checked = 0;
  int sliding_violations = 0;
  int dilation_checked = 0;
  int dilation_violations = 0;
  double worst_sliding_excess = 0.0;   // max Pr[S] - (bound); <= 0 means pass
  double worst_dilation_excess = 0.0;

  bool passed() const { return sliding_violations == 0 && dilation_violations == 0; }
};

AdmissibilityReport admissibility_spot_check(const CalibratedNoise& noise,
                                             const PrivacyBudget& budget);

}  // namespace snm
