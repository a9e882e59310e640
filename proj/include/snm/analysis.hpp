#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snm/mechanisms.hpp"
#include "snm/noise.hpp"
#include "snm/parallel.hpp"
#include "snm/rng.hpp"
#include "snm/sensitivity.hpp"

namespace snm {

enum class PmfMethod { kQuadrature, kClosedForm, kEnumeration, kMonteCarlo };

struct SelectionPmf {
  std::vector<double> probabilities;  // sums to 1 within tolerance
  PmfMethod method = PmfMethod::kQuadrature;
  double tolerance = 0.0;
  // Mass the quadrature integrated before renormalization; its distance to
  // one is the actual defect of the numeric integral.
  double raw_mass = 1.0;
};

// Selection probabilities of the noisy-max family: for each outcome r,
//   Pr[r] = integral f(z) * prod_{s != r} F(z + (u_r - u_s) / N) dz
// evaluated with adaptive quadrature over the noise's truncated support and
// renormalized. N is the full noise scale applied to the standard shape.
// If the quadrature fails to converge the truncation is widened once; a
// second failure raises std::runtime_error carrying the residual.
SelectionPmf noisy_max_pmf(std::span<const double> utilities,
                           const CalibratedNoise& noise, double noise_scale,
                           double abs_tol = 1e-8);

// Monte Carlo estimate of the same distribution (the independent oracle).
SelectionPmf noisy_max_pmf_montecarlo(std::span<const double> utilities,
                                      const CalibratedNoise& noise,
                                      double noise_scale, std::int64_t trials,
                                      const Rng& base,
                                      par::Mode mode = par::Mode::kOpenMP);

// Exponential-mechanism PMF in closed form.
SelectionPmf em_pmf(std::span<const double> utilities, double epsilon,
                    double delta_u);

// Permute-and-flip PMF: exact permutation enumeration up to 8 outcomes,
// Monte Carlo beyond that.
SelectionPmf pf_pmf(std::span<const double> utilities, double epsilon,
                    double delta_u, std::int64_t mc_trials = 1'000'000,
                    std::optional<Rng> mc_base = {});

// Expected utility error: sum_r p_r (u* - u_r).
double expected_error(const SelectionPmf& pmf,
                      std::span<const double> utilities);

// Absolute expected value error: |target - sum_r p_r value_r|.
double absolute_expected_value_error(const SelectionPmf& pmf,
                                     std::span<const double> outcome_values,
                                     double target_value);

// Expected-error upper bounds: 4 S (ln|R| + 1) / eps for Smooth Noisy Max
// with Laplace noise and 2 du (ln|R| + 1) / eps for report-noisy-max with
// exponential noise. They coincide exactly at S = du / 2.
double snm_error_bound(double smooth_value, double epsilon, int r_count);
double rnm_error_bound(double delta_u, double epsilon, int r_count);

// Variance-based comparison via Chebyshev's inequality: the distribution
// with the smaller variance has the smaller tail bound.
struct VarianceComparison {
  double variance_a = 0.0;
  double variance_b = 0.0;
  int preferred = -1;  // 0 = first, 1 = second, -1 = tie
};
VarianceComparison chebyshev_preference(const CalibratedNoise& a,
                                        const CalibratedNoise& b);

// ---------------------------------------------------------------------------
// Mechanism dispatch: one config describing any of the selection mechanisms,
// so audits and experiments can treat them uniformly.
// ---------------------------------------------------------------------------

enum class MechanismId {
  kEm,
  kPf,
  kRnmLaplace,
  kRnmExponential,
  kRnmGumbel,
  kSnmLaplace,
  kSnmStudentT,
  kSnmLln,
  kEmSmoothUnsafe,  // the approval-voting counterexample; never exposed by the CLI
};

struct MechanismSpec {
  MechanismId id = MechanismId::kEm;
  double delta = 0.01;  // SNM-Laplace / SNM-LLN calibrations
  int dof = 3;          // SNM-T
  double sigma = 1.0;   // SNM-LLN
  std::optional<double> alpha_override;  // Student's T only
  std::optional<double> beta_override;
};

// Names as used in CLI flags and CSV output: em, pf, rnm-lap, rnm-exp,
// rnm-gum, snm-lap, snm-t, snm-lln.
std::string mechanism_name(MechanismId id);
MechanismId mechanism_from_name(const std::string& name);

bool mechanism_is_snm(MechanismId id);

// Calibrated noise for the SNM variants at the given epsilon.
CalibratedNoise mechanism_noise(const MechanismSpec& spec, double epsilon);

// The additive delta the mechanism actually claims (zero for the pure-DP
// mechanisms, the calibration delta for SNM-Laplace and SNM-LLN).
double mechanism_claimed_delta(const MechanismSpec& spec);

// One draw. `sensitivity` is required for the SNM variants and the unsafe
// mechanism and must match the beta of the spec's calibration at epsilon.
int mechanism_select(const MechanismSpec& spec,
                     std::span<const double> utilities, double delta_u,
                     bool monotonic, const SmoothSensitivity& sensitivity,
                     double epsilon, Rng& rng);

// Oracle PMF for the mechanism. Permute-and-flip above 8 outcomes uses the
// report-noisy-max-with-exponential-noise quadrature (the two mechanisms
// are identical in distribution).
SelectionPmf mechanism_pmf_oracle(const MechanismSpec& spec,
                                  std::span<const double> utilities,
                                  double delta_u, bool monotonic,
                                  const SmoothSensitivity& sensitivity,
                                  double epsilon);

SelectionPmf mechanism_pmf_montecarlo(const MechanismSpec& spec,
                                      std::span<const double> utilities,
                                      double delta_u, bool monotonic,
                                      const SmoothSensitivity& sensitivity,
                                      double epsilon, std::int64_t trials,
                                      const Rng& base,
                                      par::Mode mode = par::Mode::kOpenMP);

// ---------------------------------------------------------------------------
// Empirical differential-privacy audit (a falsifier, not a prover).
// ---------------------------------------------------------------------------

// Wilson score interval at confidence z for `successes` out of `trials`.
std::pair<double, double> wilson_interval(std::int64_t successes,
                                          std::int64_t trials, double z);

struct AuditOutcomeRow {
  int outcome = 0;
  double freq_x = 0.0;
  double freq_y = 0.0;
  double x_lo = 0.0, x_hi = 0.0;  // Wilson 99% bounds
  double y_lo = 0.0, y_hi = 0.0;
  bool flagged = false;
};

struct AuditReport {
  std::string mechanism;
  double epsilon = 0.0;
  double delta = 0.0;  // claimed additive slack used in the flag rule
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<AuditOutcomeRow> outcomes;
  bool any_flag = false;

  std::string to_json() const;
};

// Runs the mechanism `trials` times on each of the neighboring databases x
// and y, and flags any outcome whose Wilson lower bound on one side exceeds
// e^eps * (Wilson upper bound on the other side) + delta, in either
// direction. Requires d(x, y) = 1 and trials >= 1e5.
AuditReport dp_audit(const MechanismSpec& spec, const UtilityModel& u,
                     const Counts& x, const Counts& y,
                     const PrivacyBudget& budget, std::int64_t trials,
                     const Rng& base, par::Mode mode = par::Mode::kOpenMP);

}  // namespace snm
