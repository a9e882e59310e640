#include "snm/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace snm {

namespace {

void require_nonempty(std::span<const double> utilities) {
  if (utilities.empty()) {
    throw std::invalid_argument("selection requires at least one outcome");
  }
}

void require_positive_sensitivity(double delta_u) {
  if (!(delta_u > 0.0)) {
    throw std::invalid_argument("global sensitivity must be positive");
  }
}

// Weights proportional to exp(epsilon * u / (2 * denom)), max-subtracted.
std::vector<double> softmax_weights(std::span<const double> utilities,
                                    double epsilon, double denom) {
  const double u_max = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> w(utilities.size());
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    w[i] = std::exp(epsilon * (utilities[i] - u_max) / (2.0 * denom));
  }
  return w;
}

int sample_index(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double target = rng.next_unit() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;  // round-off fallback
}

}  // namespace

int noisy_argmax(std::span<const double> utilities,
                 std::span<const double> noise, double scale) {
  require_nonempty(utilities);
  int best = 0;
  double best_score = utilities[0] + scale * noise[0];
  for (std::size_t i = 1; i < utilities.size(); ++i) {
    const double score = utilities[i] + scale * noise[i];
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SelectionOutcome snm_select(std::span<const double> utilities,
                            const CalibratedNoise& noise,
                            const SmoothSensitivity& sensitivity,
                            bool monotonic, Rng& rng, bool debug) {
  require_nonempty(utilities);
  if (noise.kind != NoiseKind::kLaplace && noise.kind != NoiseKind::kStudentT &&
      noise.kind != NoiseKind::kLaplaceLogNormal) {
    throw std::invalid_argument(
        "snm_select requires an admissible noise kind (laplace, student_t or "
        "laplace_log_normal)");
  }
  if (!(noise.alpha > 0.0)) {
    throw std::invalid_argument("snm_select: noise is missing its calibration");
  }
  const double rel = std::abs(sensitivity.beta - noise.beta) /
                     std::max(1e-300, std::max(std::abs(sensitivity.beta),
                                               std::abs(noise.beta)));
  if (rel > 1e-9) {
    throw std::invalid_argument(
        "snm_select: smooth sensitivity was computed with a different beta "
        "than the noise calibration; the privacy guarantee requires the pair "
        "to match");
  }
  const double factor = monotonic ? 1.0 : 2.0;
  const double scale = factor * sensitivity.value / noise.alpha;

  std::vector<double> z(utilities.size());
  for (double& v : z) v = noise.sample(rng);

  SelectionOutcome out;
  out.chosen = noisy_argmax(utilities, z, scale);
  if (debug) {
    out.debug_noisy_scores.resize(utilities.size());
    for (std::size_t i = 0; i < utilities.size(); ++i) {
      out.debug_noisy_scores[i] = utilities[i] + scale * z[i];
    }
  }
  return out;
}

SelectionOutcome snm_select(const UtilityModel& u, const Counts& x,
                            const CalibratedNoise& noise,
                            const SmoothSensitivity& sensitivity, Rng& rng,
                            bool debug) {
  const std::vector<double> scores = utility_vector(u, x);
  return snm_select(scores, noise, sensitivity, u.monotonic, rng, debug);
}

SelectionOutcome exponential_mechanism(std::span<const double> utilities,
                                       double epsilon, double delta_u,
                                       Rng& rng) {
  require_nonempty(utilities);
  require_positive_sensitivity(delta_u);
  const std::vector<double> w = softmax_weights(utilities, epsilon, delta_u);
  SelectionOutcome out;
  out.chosen = sample_index(w, rng);
  return out;
}

SelectionOutcome permute_and_flip(std::span<const double> utilities,
                                  double epsilon, double delta_u, Rng& rng) {
  require_nonempty(utilities);
  require_positive_sensitivity(delta_u);
  const double u_max = *std::max_element(utilities.begin(), utilities.end());

  thread_local std::vector<int> order;
  order.resize(utilities.size());
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates driven by the same uniform stream as everything else
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }

  SelectionOutcome out;
  for (int r : order) {
    // accept with prob exp(eps (u_r - u*) / (2 du)), compared in log space
    const double log_accept =
        epsilon * (utilities[static_cast<std::size_t>(r)] - u_max) /
        (2.0 * delta_u);
    if (std::log(rng.next_unit()) <= log_accept) {
      out.chosen = r;
      return out;
    }
  }
  // unreachable: the max-utility outcome accepts with probability one
  out.chosen = order.back();
  return out;
}

SelectionOutcome report_noisy_max(std::span<const double> utilities,
                                  NoiseKind kind, double epsilon,
                                  double delta_u, Rng& rng, bool debug) {
  require_nonempty(utilities);
  require_positive_sensitivity(delta_u);
  if (kind != NoiseKind::kLaplace && kind != NoiseKind::kExponential &&
      kind != NoiseKind::kGumbel) {
    throw std::invalid_argument(
        "report_noisy_max supports laplace, exponential and gumbel noise");
  }
  const CalibratedNoise noise = standard_noise(kind);
  const double scale = 2.0 * delta_u / epsilon;

  std::vector<double> z(utilities.size());
  for (double& v : z) v = noise.sample(rng);

  SelectionOutcome out;
  out.chosen = noisy_argmax(utilities, z, scale);
  if (debug) {
    out.debug_noisy_scores.resize(utilities.size());
    for (std::size_t i = 0; i < utilities.size(); ++i) {
      out.debug_noisy_scores[i] = utilities[i] + scale * z[i];
    }
  }
  return out;
}

std::vector<double> em_smooth_unsafe_pmf(std::span<const double> utilities,
                                         double epsilon, double smooth_value) {
  if (!(smooth_value > 0.0)) {
    throw std::invalid_argument("smooth sensitivity value must be positive");
  }
  const double u_max = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> w(utilities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    w[i] = std::exp(epsilon * (utilities[i] - u_max) / (2.0 * smooth_value));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

SelectionOutcome em_with_smooth_sensitivity_unsafe(
    std::span<const double> utilities, double epsilon,
    const SmoothSensitivity& sensitivity, Rng& rng,
    bool acknowledge_not_private) {
  require_nonempty(utilities);
  if (!acknowledge_not_private) {
    throw std::invalid_argument(
        "em_with_smooth_sensitivity_unsafe violates differential privacy; "
        "pass acknowledge_not_private = true to run it anyway");
  }
  const std::vector<double> w =
      softmax_weights(utilities, epsilon, sensitivity.value);
  SelectionOutcome out;
  out.chosen = sample_index(w, rng);
  return out;
}

}  // namespace snm
