#include "snm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "snm/quadrature.hpp"

namespace snm {

namespace {

constexpr double kWilson99Z = 2.5758293035489004;  // Phi^{-1}(0.995)

std::vector<double> renormalized(std::vector<double> p) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) {
    throw std::runtime_error("selection pmf: probability mass vanished");
  }
  for (double& v : p) v /= total;
  return p;
}

double integrate_outcome(std::span<const double> utilities, std::size_t r,
                         const CalibratedNoise& noise, double noise_scale,
                         double halfwidth, double abs_tol, bool* converged) {
  const double lo =
      noise.kind == NoiseKind::kExponential ? 0.0 : -halfwidth;
  const double hi = halfwidth;

  std::vector<double> scaled_gaps(utilities.size());
  for (std::size_t s = 0; s < utilities.size(); ++s) {
    scaled_gaps[s] = (utilities[r] - utilities[s]) / noise_scale;
  }

  auto integrand = [&](double z) {
    double value = noise.pdf(z);
    if (value == 0.0) return 0.0;
    for (std::size_t s = 0; s < utilities.size(); ++s) {
      if (s == r) continue;
      value *= noise.cdf(z + scaled_gaps[s]);
      if (value == 0.0) return 0.0;
    }
    return value;
  };

  // Seed the subdivision at the cdf kinks (arguments crossing zero) and at
  // a geometric ladder so heavy-tailed supports refine quickly.
  std::vector<double> breaks = {0.0, -2.0, 2.0, -10.0, 10.0, -100.0, 100.0};
  for (std::size_t s = 0; s < utilities.size() && breaks.size() < 48; ++s) {
    if (s == r) continue;
    breaks.push_back(-scaled_gaps[s]);
  }

  QuadratureResult q = integrate_adaptive(integrand, lo, hi, abs_tol, breaks);
  *converged = q.converged;
  return q.value;
}

}  // namespace

SelectionPmf noisy_max_pmf(std::span<const double> utilities,
                           const CalibratedNoise& noise, double noise_scale,
                           double abs_tol) {
  if (utilities.empty()) {
    throw std::invalid_argument("noisy_max_pmf: at least one outcome required");
  }
  if (!(noise_scale > 0.0)) {
    throw std::invalid_argument("noisy_max_pmf: noise scale must be positive");
  }

  SelectionPmf pmf;
  pmf.method = PmfMethod::kQuadrature;
  pmf.tolerance = 1e-6;
  pmf.probabilities.resize(utilities.size());

  double halfwidth = noise.truncation_halfwidth();
  for (int attempt = 0;; ++attempt) {
    bool all_converged = true;
    double residual = 0.0;
    for (std::size_t r = 0; r < utilities.size(); ++r) {
      bool converged = false;
      pmf.probabilities[r] = integrate_outcome(utilities, r, noise,
                                               noise_scale, halfwidth, abs_tol,
                                               &converged);
      if (!converged) {
        all_converged = false;
        residual += std::abs(1.0 - pmf.probabilities[r]);
      }
    }
    if (all_converged) break;
    if (attempt >= 1) {
      std::ostringstream msg;
      msg << "noisy_max_pmf: quadrature did not converge after widening the "
             "truncation (residual "
          << residual << ")";
      throw std::runtime_error(msg.str());
    }
    halfwidth *= 2.0;
  }

  pmf.raw_mass = std::accumulate(pmf.probabilities.begin(),
                                 pmf.probabilities.end(), 0.0);
  pmf.probabilities = renormalized(std::move(pmf.probabilities));
  return pmf;
}

SelectionPmf noisy_max_pmf_montecarlo(std::span<const double> utilities,
                                      const CalibratedNoise& noise,
                                      double noise_scale, std::int64_t trials,
                                      const Rng& base, par::Mode mode) {
  std::vector<double> utils(utilities.begin(), utilities.end());
  auto counts = par::count_outcomes(
      trials, static_cast<int>(utils.size()), base,
      [&](Rng& rng) {
        thread_local std::vector<double> z;
        z.resize(utils.size());
        for (double& v : z) v = noise.sample(rng);
        return noisy_argmax(utils, z, noise_scale);
      },
      mode);
  SelectionPmf pmf;
  pmf.method = PmfMethod::kMonteCarlo;
  pmf.tolerance = 3.0 / std::sqrt(static_cast<double>(trials));
  pmf.probabilities.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    pmf.probabilities[i] =
        static_cast<double>(counts[i]) / static_cast<double>(trials);
  }
  return pmf;
}

SelectionPmf em_pmf(std::span<const double> utilities, double epsilon,
                    double delta_u) {
  if (!(delta_u > 0.0)) {
    throw std::invalid_argument("em_pmf: delta_u must be positive");
  }
  const double u_max = *std::max_element(utilities.begin(), utilities.end());
  SelectionPmf pmf;
  pmf.method = PmfMethod::kClosedForm;
  pmf.tolerance = 1e-12;
  pmf.probabilities.resize(utilities.size());
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    pmf.probabilities[i] =
        std::exp(epsilon * (utilities[i] - u_max) / (2.0 * delta_u));
  }
  pmf.probabilities = renormalized(std::move(pmf.probabilities));
  return pmf;
}

SelectionPmf pf_pmf(std::span<const double> utilities, double epsilon,
                    double delta_u, std::int64_t mc_trials,
                    std::optional<Rng> mc_base) {
  if (!(delta_u > 0.0)) {
    throw std::invalid_argument("pf_pmf: delta_u must be positive");
  }
  const std::size_t n = utilities.size();
  const double u_max = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> accept(n);
  for (std::size_t i = 0; i < n; ++i) {
    accept[i] = std::exp(epsilon * (utilities[i] - u_max) / (2.0 * delta_u));
  }

  if (n <= 8) {
    // Sum the accept/reject paths over every visiting order exactly.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> prob(n, 0.0);
    const double inv_perms = [&] {
      double f = 1.0;
      for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
      return 1.0 / f;
    }();
    do {
      double reach = 1.0;
      for (std::size_t pos = 0; pos < n; ++pos) {
        const int r = order[pos];
        prob[static_cast<std::size_t>(r)] +=
            inv_perms * reach * accept[static_cast<std::size_t>(r)];
        reach *= 1.0 - accept[static_cast<std::size_t>(r)];
        if (reach == 0.0) break;
      }
    } while (std::next_permutation(order.begin(), order.end()));

    SelectionPmf pmf;
    pmf.method = PmfMethod::kEnumeration;
    pmf.tolerance = 1e-12;
    pmf.probabilities = renormalized(std::move(prob));
    return pmf;
  }

  Rng base = mc_base.value_or(Rng(0x9f731a2cULL));
  std::vector<double> utils(utilities.begin(), utilities.end());
  auto counts = par::count_outcomes(
      mc_trials, static_cast<int>(n), base,
      [&](Rng& rng) { return permute_and_flip(utils, epsilon, delta_u, rng).chosen; });
  SelectionPmf pmf;
  pmf.method = PmfMethod::kMonteCarlo;
  pmf.tolerance = 3.0 / std::sqrt(static_cast<double>(mc_trials));
  pmf.probabilities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pmf.probabilities[i] =
        static_cast<double>(counts[i]) / static_cast<double>(mc_trials);
  }
  return pmf;
}

double expected_error(const SelectionPmf& pmf,
                      std::span<const double> utilities) {
  if (pmf.probabilities.size() != utilities.size()) {
    throw std::invalid_argument("expected_error: outcome sets do not match");
  }
  const double u_max = *std::max_element(utilities.begin(), utilities.end());
  double err = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    err += pmf.probabilities[i] * (u_max - utilities[i]);
  }
  return err;
}

double absolute_expected_value_error(const SelectionPmf& pmf,
                                     std::span<const double> outcome_values,
                                     double target_value) {
  if (pmf.probabilities.size() != outcome_values.size()) {
    throw std::invalid_argument("aee: outcome sets do not match");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < outcome_values.size(); ++i) {
    mean += pmf.probabilities[i] * outcome_values[i];
  }
  return std::abs(target_value - mean);
}

double snm_error_bound(double smooth_value, double epsilon, int r_count) {
  if (!(epsilon > 0.0) || r_count < 1) {
    throw std::invalid_argument("snm_error_bound: eps > 0 and |R| >= 1 required");
  }
  return 4.0 * smooth_value * (std::log(static_cast<double>(r_count)) + 1.0) /
         epsilon;
}

double rnm_error_bound(double delta_u, double epsilon, int r_count) {
  if (!(epsilon > 0.0) || r_count < 1) {
    throw std::invalid_argument("rnm_error_bound: eps > 0 and |R| >= 1 required");
  }
  return 2.0 * delta_u * (std::log(static_cast<double>(r_count)) + 1.0) /
         epsilon;
}

VarianceComparison chebyshev_preference(const CalibratedNoise& a,
                                        const CalibratedNoise& b) {
  VarianceComparison cmp;
  cmp.variance_a = a.variance();
  cmp.variance_b = b.variance();
  const double tol = 1e-12 * std::max(cmp.variance_a, cmp.variance_b);
  if (std::abs(cmp.variance_a - cmp.variance_b) <= tol) {
    cmp.preferred = -1;
  } else {
    cmp.preferred = cmp.variance_a < cmp.variance_b ? 0 : 1;
  }
  return cmp;
}

std::string mechanism_name(MechanismId id) {
  switch (id) {
    case MechanismId::kEm: return "em";
    case MechanismId::kPf: return "pf";
    case MechanismId::kRnmLaplace: return "rnm-lap";
    case MechanismId::kRnmExponential: return "rnm-exp";
    case MechanismId::kRnmGumbel: return "rnm-gum";
    case MechanismId::kSnmLaplace: return "snm-lap";
    case MechanismId::kSnmStudentT: return "snm-t";
    case MechanismId::kSnmLln: return "snm-lln";
    case MechanismId::kEmSmoothUnsafe: return "em-smooth-unsafe";
  }
  return "unknown";
}

MechanismId mechanism_from_name(const std::string& name) {
  if (name == "em") return MechanismId::kEm;
  if (name == "pf") return MechanismId::kPf;
  if (name == "rnm-lap") return MechanismId::kRnmLaplace;
  if (name == "rnm-exp") return MechanismId::kRnmExponential;
  if (name == "rnm-gum") return MechanismId::kRnmGumbel;
  if (name == "snm-lap") return MechanismId::kSnmLaplace;
  if (name == "snm-t") return MechanismId::kSnmStudentT;
  if (name == "snm-lln") return MechanismId::kSnmLln;
  if (name == "em-smooth-unsafe") return MechanismId::kEmSmoothUnsafe;
  throw std::invalid_argument("unknown mechanism name: " + name);
}

bool mechanism_is_snm(MechanismId id) {
  return id == MechanismId::kSnmLaplace || id == MechanismId::kSnmStudentT ||
         id == MechanismId::kSnmLln;
}

CalibratedNoise mechanism_noise(const MechanismSpec& spec, double epsilon) {
  PrivacyBudget budget{epsilon, spec.delta};
  switch (spec.id) {
    case MechanismId::kSnmLaplace:
      return calibrate_laplace(budget);
    case MechanismId::kSnmStudentT:
      return calibrate_student_t(PrivacyBudget{epsilon, 0.0}, spec.dof,
                                 spec.alpha_override, spec.beta_override);
    case MechanismId::kSnmLln:
      return calibrate_lln(budget, spec.sigma, spec.beta_override);
    default:
      throw std::invalid_argument("mechanism_noise: not an SNM variant");
  }
}

double mechanism_claimed_delta(const MechanismSpec& spec) {
  if (spec.id == MechanismId::kSnmLaplace || spec.id == MechanismId::kSnmLln) {
    return spec.delta;
  }
  return 0.0;
}

namespace {

// Precompiled per-trial runner: everything that does not depend on the draw
// (calibration, scales, weight tables) is computed once, so the hot loops of
// the audit and the Monte Carlo PMFs are allocation-free.
struct CompiledMechanism {
  enum class Kind { kWeighted, kNoisyMax, kPermuteFlip } kind;
  std::vector<double> utilities;
  std::vector<double> cumulative;  // kWeighted
  CalibratedNoise noise;           // kNoisyMax
  double scale = 0.0;
  double epsilon = 0.0, delta_u = 1.0;

  int operator()(Rng& rng) const {
    switch (kind) {
      case Kind::kWeighted: {
        const double target = rng.next_unit() * cumulative.back();
        for (std::size_t i = 0; i < cumulative.size(); ++i) {
          if (target <= cumulative[i]) return static_cast<int>(i);
        }
        return static_cast<int>(cumulative.size()) - 1;
      }
      case Kind::kNoisyMax: {
        thread_local std::vector<double> z;
        z.resize(utilities.size());
        for (double& v : z) v = noise.sample(rng);
        return noisy_argmax(utilities, z, scale);
      }
      case Kind::kPermuteFlip:
        return permute_and_flip(utilities, epsilon, delta_u, rng).chosen;
    }
    return 0;
  }
};

CompiledMechanism compile_mechanism(const MechanismSpec& spec,
                                    std::span<const double> utilities,
                                    double delta_u, bool monotonic,
                                    const SmoothSensitivity& sensitivity,
                                    double epsilon) {
  CompiledMechanism m;
  m.utilities.assign(utilities.begin(), utilities.end());
  m.epsilon = epsilon;
  m.delta_u = delta_u;
  auto weighted = [&](double denom) {
    m.kind = CompiledMechanism::Kind::kWeighted;
    const double u_max = *std::max_element(utilities.begin(), utilities.end());
    m.cumulative.resize(utilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i) {
      acc += std::exp(epsilon * (utilities[i] - u_max) / (2.0 * denom));
      m.cumulative[i] = acc;
    }
  };
  switch (spec.id) {
    case MechanismId::kEm:
      weighted(delta_u);
      break;
    case MechanismId::kEmSmoothUnsafe:
      weighted(sensitivity.value);
      break;
    case MechanismId::kPf:
      m.kind = CompiledMechanism::Kind::kPermuteFlip;
      break;
    case MechanismId::kRnmLaplace:
    case MechanismId::kRnmExponential:
    case MechanismId::kRnmGumbel:
      m.kind = CompiledMechanism::Kind::kNoisyMax;
      m.noise = standard_noise(spec.id == MechanismId::kRnmLaplace
                                   ? NoiseKind::kLaplace
                                   : spec.id == MechanismId::kRnmExponential
                                         ? NoiseKind::kExponential
                                         : NoiseKind::kGumbel);
      m.scale = 2.0 * delta_u / epsilon;
      break;
    case MechanismId::kSnmLaplace:
    case MechanismId::kSnmStudentT:
    case MechanismId::kSnmLln: {
      m.kind = CompiledMechanism::Kind::kNoisyMax;
      m.noise = mechanism_noise(spec, epsilon);
      const double rel =
          std::abs(sensitivity.beta - m.noise.beta) /
          std::max(1e-300, std::max(std::abs(sensitivity.beta),
                                    std::abs(m.noise.beta)));
      if (rel > 1e-9) {
        throw std::invalid_argument(
            "compiled snm: smooth sensitivity beta does not match the noise "
            "calibration");
      }
      m.scale = (monotonic ? 1.0 : 2.0) * sensitivity.value / m.noise.alpha;
      break;
    }
  }
  return m;
}

}  // namespace

int mechanism_select(const MechanismSpec& spec,
                     std::span<const double> utilities, double delta_u,
                     bool monotonic, const SmoothSensitivity& sensitivity,
                     double epsilon, Rng& rng) {
  switch (spec.id) {
    case MechanismId::kEm:
      return exponential_mechanism(utilities, epsilon, delta_u, rng).chosen;
    case MechanismId::kPf:
      return permute_and_flip(utilities, epsilon, delta_u, rng).chosen;
    case MechanismId::kRnmLaplace:
      return report_noisy_max(utilities, NoiseKind::kLaplace, epsilon, delta_u, rng).chosen;
    case MechanismId::kRnmExponential:
      return report_noisy_max(utilities, NoiseKind::kExponential, epsilon, delta_u, rng).chosen;
    case MechanismId::kRnmGumbel:
      return report_noisy_max(utilities, NoiseKind::kGumbel, epsilon, delta_u, rng).chosen;
    case MechanismId::kSnmLaplace:
    case MechanismId::kSnmStudentT:
    case MechanismId::kSnmLln: {
      const CalibratedNoise noise = mechanism_noise(spec, epsilon);
      return snm_select(utilities, noise, sensitivity, monotonic, rng).chosen;
    }
    case MechanismId::kEmSmoothUnsafe:
      return em_with_smooth_sensitivity_unsafe(utilities, epsilon, sensitivity,
                                               rng, true)
          .chosen;
  }
  throw std::invalid_argument("mechanism_select: unhandled mechanism");
}

SelectionPmf mechanism_pmf_oracle(const MechanismSpec& spec,
                                  std::span<const double> utilities,
                                  double delta_u, bool monotonic,
                                  const SmoothSensitivity& sensitivity,
                                  double epsilon) {
  switch (spec.id) {
    case MechanismId::kEm:
      return em_pmf(utilities, epsilon, delta_u);
    case MechanismId::kPf:
      if (utilities.size() <= 8) return pf_pmf(utilities, epsilon, delta_u);
      // identical in distribution to report-noisy-max with exponential noise
      return noisy_max_pmf(utilities, standard_noise(NoiseKind::kExponential),
                           2.0 * delta_u / epsilon);
    case MechanismId::kRnmLaplace:
      return noisy_max_pmf(utilities, standard_noise(NoiseKind::kLaplace),
                           2.0 * delta_u / epsilon);
    case MechanismId::kRnmExponential:
      return noisy_max_pmf(utilities, standard_noise(NoiseKind::kExponential),
                           2.0 * delta_u / epsilon);
    case MechanismId::kRnmGumbel:
      return noisy_max_pmf(utilities, standard_noise(NoiseKind::kGumbel),
                           2.0 * delta_u / epsilon);
    case MechanismId::kSnmLaplace:
    case MechanismId::kSnmStudentT:
    case MechanismId::kSnmLln: {
      const CalibratedNoise noise = mechanism_noise(spec, epsilon);
      const double factor = monotonic ? 1.0 : 2.0;
      return noisy_max_pmf(utilities, noise,
                           factor * sensitivity.value / noise.alpha);
    }
    case MechanismId::kEmSmoothUnsafe: {
      SelectionPmf pmf;
      pmf.method = PmfMethod::kClosedForm;
      pmf.tolerance = 1e-12;
      pmf.probabilities =
          em_smooth_unsafe_pmf(utilities, epsilon, sensitivity.value);
      return pmf;
    }
  }
  throw std::invalid_argument("mechanism_pmf_oracle: unhandled mechanism");
}

SelectionPmf mechanism_pmf_montecarlo(const MechanismSpec& spec,
                                      std::span<const double> utilities,
                                      double delta_u, bool monotonic,
                                      const SmoothSensitivity& sensitivity,
                                      double epsilon, std::int64_t trials,
                                      const Rng& base, par::Mode mode) {
  const CompiledMechanism run =
      compile_mechanism(spec, utilities, delta_u, monotonic, sensitivity, epsilon);
  auto counts = par::count_outcomes(trials, static_cast<int>(utilities.size()),
                                    base, run, mode);
  SelectionPmf pmf;
  pmf.method = PmfMethod::kMonteCarlo;
  pmf.tolerance = 3.0 / std::sqrt(static_cast<double>(trials));
  pmf.probabilities.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    pmf.probabilities[i] =
        static_cast<double>(counts[i]) / static_cast<double>(trials);
  }
  return pmf;
}

std::pair<double, double> wilson_interval(std::int64_t successes,
                                          std::int64_t trials, double z) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

AuditReport dp_audit(const MechanismSpec& spec, const UtilityModel& u,
                     const Counts& x, const Counts& y,
                     const PrivacyBudget& budget, std::int64_t trials,
                     const Rng& base, par::Mode mode) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dp_audit: databases use different universes");
  }
  int dist = 0;
  for (std::size_t i = 0; i < x.size(); ++i) dist += std::abs(x[i] - y[i]);
  if (dist != 1) {
    throw std::invalid_argument("dp_audit: databases must be neighbors (distance 1)");
  }
  if (trials < 100'000) {
    throw std::invalid_argument("dp_audit: at least 1e5 trials required");
  }
  budget.validate();

  const double eps = budget.epsilon;
  const double claimed_delta = mechanism_claimed_delta(spec);

  auto run_side = [&](const Counts& db, std::uint64_t salt) {
    const std::vector<double> utils = utility_vector(u, db);
    SmoothSensitivity s;
    if (mechanism_is_snm(spec.id) || spec.id == MechanismId::kEmSmoothUnsafe) {
      const double beta = spec.id == MechanismId::kEmSmoothUnsafe
                              ? eps
                              : mechanism_noise(spec, eps).beta;
      s = smooth_sensitivity(u, db, beta, mode);
    }
    const CompiledMechanism run = compile_mechanism(
        spec, utils, u.global_sensitivity, u.monotonic, s, eps);
    return par::count_outcomes(trials, u.outcome_count, base.split(salt), run,
                               mode);
  };

  const auto counts_x = run_side(x, 0xA153u);
  const auto counts_y = run_side(y, 0xB2C4u);

  AuditReport report;
  report.mechanism = mechanism_name(spec.id);
  report.epsilon = eps;
  report.delta = claimed_delta;
  report.trials = trials;
  report.seed = base.state();

  const double factor = std::exp(eps);
  for (int r = 0; r < u.outcome_count; ++r) {
    AuditOutcomeRow row;
    row.outcome = r;
    const auto i = static_cast<std::size_t>(r);
    row.freq_x = static_cast<double>(counts_x[i]) / static_cast<double>(trials);
    row.freq_y = static_cast<double>(counts_y[i]) / static_cast<double>(trials);
    std::tie(row.x_lo, row.x_hi) = wilson_interval(counts_x[i], trials, kWilson99Z);
    std::tie(row.y_lo, row.y_hi) = wilson_interval(counts_y[i], trials, kWilson99Z);
    const bool xy = row.x_lo > factor * row.y_hi + claimed_delta;
    const bool yx = row.y_lo > factor * row.x_hi + claimed_delta;
    row.flagged = xy || yx;
    report.any_flag = report.any_flag || row.flagged;
    report.outcomes.push_back(row);
  }
  return report;
}

std::string AuditReport::to_json() const {
  nlohmann::ordered_json j;
  j["mechanism"] = mechanism;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["trials"] = trials;
  j["seed"] = seed;
  j["any_flag"] = any_flag;
  j["outcomes"] = nlohmann::ordered_json::array();
  for (const auto& row : outcomes) {
    nlohmann::ordered_json o;
    o["outcome"] = row.outcome;
    o["freq_x"] = row.freq_x;
    o["freq_y"] = row.freq_y;
    o["wilson_x"] = {row.x_lo, row.x_hi};
    o["wilson_y"] = {row.y_lo, row.y_hi};
    o["flagged"] = row.flagged;
    j["outcomes"].push_back(o);
  }
  return j.dump(2);
}

}  // namespace snm
