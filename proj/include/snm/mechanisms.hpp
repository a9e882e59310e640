#pragma once

#include <span>
#include <vector>

#include "snm/noise.hpp"
#include "snm/rng.hpp"
#include "snm/sensitivity.hpp"

namespace snm {

// Result of one randomized selection. The noisy scores are filled only when
// the caller asks for debug output; only the argmax itself is safe to
// release, so no public reporting path ever serializes the scores.
struct SelectionOutcome {
  int chosen = 0;
  std::vector<double> debug_noisy_scores;  // empty unless debug was requested
};

// Argmax of utilities[r] + scale * noise[r], ties to the lowest index.
// Shared by every noisy-max style mechanism and directly injectable in tests.
int noisy_argmax(std::span<const double> utilities,
                 std::span<const double> noise, double scale);

// Smooth Noisy Max: perturbs each utility with (2S/alpha) * Z (S/alpha when
// the utility is monotonic) and returns the argmax. The noise must be one of
// the admissible kinds (Laplace, Student's T, Laplace Log-Normal) and the
// smooth sensitivity must have been computed with the same beta the noise
// was calibrated for; a mismatch voids the privacy guarantee and throws.
SelectionOutcome snm_select(std::span<const double> utilities,
                            const CalibratedNoise& noise,
                            const SmoothSensitivity& sensitivity,
                            bool monotonic, Rng& rng, bool debug = false);

// Convenience overload evaluating the utility model on the database first.
SelectionOutcome snm_select(const UtilityModel& u, const Counts& x,
                            const CalibratedNoise& noise,
                            const SmoothSensitivity& sensitivity, Rng& rng,
                            bool debug = false);

// Exponential mechanism: samples r with probability proportional to
// exp(eps * u_r / (2 delta_u)). The max utility is subtracted before
// exponentiation so large eps*u never overflows.
SelectionOutcome exponential_mechanism(std::span<const double> utilities,
                                       double epsilon, double delta_u,
                                       Rng& rng);

// Permute-and-flip: visits outcomes in random order and accepts r with
// probability exp(eps (u_r - u*) / (2 delta_u)); the top-scoring outcome
// accepts with probability one, so a pass always terminates.
SelectionOutcome permute_and_flip(std::span<const double> utilities,
                                  double epsilon, double delta_u, Rng& rng);

// Report-noisy-max with standard-shape noise scaled by 2 delta_u / eps.
// Supported kinds: Laplace, Exponential, Gumbel.
SelectionOutcome report_noisy_max(std::span<const double> utilities,
                                  NoiseKind kind, double epsilon,
                                  double delta_u, Rng& rng, bool debug = false);

// Exponential mechanism with the smooth sensitivity in place of the global
// one. This provably violates differential privacy; it exists only so the
// counterexample (and the audit that flags it) can be reproduced. Callers
// must pass acknowledge_not_private = true or the call is refused.
SelectionOutcome em_with_smooth_sensitivity_unsafe(
    std::span<const double> utilities, double epsilon,
    const SmoothSensitivity& sensitivity, Rng& rng,
    bool acknowledge_not_private);

// Exact PMF of em_with_smooth_sensitivity_unsafe (closed form), used by the
// counterexample reproduction.
std::vector<double> em_smooth_unsafe_pmf(std::span<const double> utilities,
                                         double epsilon, double smooth_value);

}  // namespace snm
