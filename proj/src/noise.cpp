#include "snm/noise.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "snm/quadrature.hpp"

namespace snm {

namespace {

constexpr double kPi = 3.14159265358979323846;

double laplace_pdf(double z) { return 0.5 * std::exp(-std::abs(z)); }

double laplace_cdf(double z) {
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double laplace_quantile(double u) {
  return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
}

// Box-Muller; consumes exactly two uniforms per call.
double normal_sample(Rng& rng) {
  const double u1 = rng.next_unit();
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Bailey's polar method: exact Student's T variate for any dof.
double student_t_sample(int dof, Rng& rng) {
  for (;;) {
    const double u = 2.0 * rng.next_unit() - 1.0;
    const double v = 2.0 * rng.next_unit() - 1.0;
    const double w = u * u + v * v;
    if (w > 0.0 && w < 1.0) {
      const double d = static_cast<double>(dof);
      return u * std::sqrt(d * (std::pow(w, -2.0 / d) - 1.0) / w);
    }
  }
}

// 64-point Gauss-Hermite table for the Laplace Log-Normal mixing integral,
// built once. With y = sqrt(2)*x_i the approximation is
//   E_{Y~N(0,1)}[ g(Y) ] ~= (1/sqrt(pi)) * sum_i w_i g(sqrt(2) x_i).
struct HermiteTable {
  std::vector<double> y;       // sqrt(2) * node
  std::vector<double> weight;  // w_i / sqrt(pi)
};

const HermiteTable& hermite_table() {
  static HermiteTable table = [] {
    std::vector<double> x, w;
    gauss_hermite(64, x, w);
    HermiteTable t;
    t.y.resize(x.size());
    t.weight.resize(w.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      t.y[i] = std::sqrt(2.0) * x[i];
      t.weight[i] = w[i] / std::sqrt(kPi);
    }
    return t;
  }();
  return table;
}

double lln_pdf(double z, double sigma) {
  const HermiteTable& t = hermite_table();
  double acc = 0.0;
  for (std::size_t i = 0; i < t.y.size(); ++i) {
    const double inv_scale = std::exp(-sigma * t.y[i]);
    acc += t.weight[i] * inv_scale * laplace_pdf(z * inv_scale);
  }
  return acc;
}

double lln_cdf(double z, double sigma) {
  const HermiteTable& t = hermite_table();
  double acc = 0.0;
  for (std::size_t i = 0; i < t.y.size(); ++i) {
    acc += t.weight[i] * laplace_cdf(z * std::exp(-sigma * t.y[i]));
  }
  // quadrature round-off can leave the result a hair outside [0, 1]
  return std::min(1.0, std::max(0.0, acc));
}

boost::math::students_t_distribution<double> student_dist(int dof) {
  return boost::math::students_t_distribution<double>(static_cast<double>(dof));
}

}  // namespace

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("privacy budget: epsilon must be positive");
  }
  if (!(delta >= 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("privacy budget: delta must lie in [0, 1)");
  }
}

std::string noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kLaplace: return "laplace";
    case NoiseKind::kStudentT: return "student_t";
    case NoiseKind::kLaplaceLogNormal: return "laplace_log_normal";
    case NoiseKind::kGumbel: return "gumbel";
    case NoiseKind::kExponential: return "exponential";
  }
  return "unknown";
}

double CalibratedNoise::pdf(double z) const {
  switch (kind) {
    case NoiseKind::kLaplace:
      return laplace_pdf(z);
    case NoiseKind::kStudentT:
      return boost::math::pdf(student_dist(dof), z);
    case NoiseKind::kLaplaceLogNormal:
      return lln_pdf(z, sigma);
    case NoiseKind::kGumbel: {
      const double t = std::exp(-z);
      return t * std::exp(-t);
    }
    case NoiseKind::kExponential:
      return z < 0.0 ? 0.0 : std::exp(-z);
  }
  return 0.0;
}

double CalibratedNoise::cdf(double z) const {
  switch (kind) {
    case NoiseKind::kLaplace:
      return laplace_cdf(z);
    case NoiseKind::kStudentT:
      if (z < -1e12) return 0.0;
      if (z > 1e12) return 1.0;
      return boost::math::cdf(student_dist(dof), z);
    case NoiseKind::kLaplaceLogNormal:
      if (z < -1e300) return 0.0;
      if (z > 1e300) return 1.0;
      return lln_cdf(z, sigma);
    case NoiseKind::kGumbel:
      return std::exp(-std::exp(-z));
    case NoiseKind::kExponential:
      return z < 0.0 ? 0.0 : 1.0 - std::exp(-z);
  }
  return 0.0;
}

double CalibratedNoise::sample(Rng& rng) const {
  switch (kind) {
    case NoiseKind::kLaplace:
      return laplace_quantile(rng.next_unit());
    case NoiseKind::kStudentT:
      return student_t_sample(dof, rng);
    case NoiseKind::kLaplaceLogNormal: {
      const double lap = laplace_quantile(rng.next_unit());
      return lap * std::exp(sigma * normal_sample(rng));
    }
    case NoiseKind::kGumbel:
      return -std::log(-std::log(rng.next_unit()));
    case NoiseKind::kExponential:
      return -std::log(rng.next_unit());
  }
  return 0.0;
}

double CalibratedNoise::variance() const {
  switch (kind) {
    case NoiseKind::kLaplace:
      return 2.0;
    case NoiseKind::kStudentT:
      if (dof <= 2) throw std::domain_error("student_t variance needs dof > 2");
      return static_cast<double>(dof) / (dof - 2);
    case NoiseKind::kLaplaceLogNormal:
      return 2.0 * std::exp(2.0 * sigma * sigma);
    case NoiseKind::kGumbel:
      return kPi * kPi / 6.0;
    case NoiseKind::kExponential:
      return 1.0;
  }
  return 0.0;
}

double CalibratedNoise::truncation_halfwidth() const {
  switch (kind) {
    case NoiseKind::kLaplace:
    case NoiseKind::kGumbel:
    case NoiseKind::kExponential:
      return 50.0;
    case NoiseKind::kStudentT:
      return 1e4;
    case NoiseKind::kLaplaceLogNormal:
      // |L| <= 50 except mass ~e^{-50}; |Y| <= 6.5 except mass ~4e-11, so
      // 50*exp(6.5*sigma) covers all but <1e-9 of the distribution even for
      // large sigma. The 1e4 floor matches the lighter-tail kinds' regime.
      return std::max(1e4, 50.0 * std::exp(6.5 * sigma));
  }
  return 50.0;
}

CalibratedNoise calibrate_laplace(const PrivacyBudget& budget) {
  budget.validate();
  if (budget.delta <= 0.0) {
    throw std::invalid_argument(
        "calibrate_laplace: delta must be positive (Laplace noise only gives "
        "approximate differential privacy)");
  }
  CalibratedNoise n;
  n.kind = NoiseKind::kLaplace;
  n.alpha = budget.epsilon / 2.0;
  n.beta = budget.epsilon / (2.0 * std::log(2.0 / budget.delta));
  return n;
}

CalibratedNoise calibrate_student_t(const PrivacyBudget& budget, int dof,
                                    std::optional<double> alpha_override,
                                    std::optional<double> beta_override) {
  budget.validate();
  if (dof < 3) {
    throw std::invalid_argument(
        "calibrate_student_t: dof >= 3 required (finite variance is needed "
        "for the distribution comparison)");
  }
  CalibratedNoise n;
  n.kind = NoiseKind::kStudentT;
  n.dof = dof;
  n.alpha = alpha_override.value_or(budget.epsilon / 2.0);
  n.beta = beta_override.value_or(budget.epsilon / (2.0 * (dof + 1)));
  if (!(n.alpha > 0.0) || !(n.beta >= 0.0)) {
    throw std::invalid_argument("calibrate_student_t: alpha > 0 and beta >= 0 required");
  }
  return n;
}

CalibratedNoise calibrate_lln(const PrivacyBudget& budget, double sigma,
                              std::optional<double> beta_override) {
  budget.validate();
  if (budget.delta <= 0.0) {
    throw std::invalid_argument("calibrate_lln: delta must be positive");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("calibrate_lln: sigma must be positive");
  }
  CalibratedNoise n;
  n.kind = NoiseKind::kLaplaceLogNormal;
  n.sigma = sigma;
  n.beta = beta_override.value_or(sigma * budget.epsilon / 2.0);
  if (!(n.beta < sigma * budget.epsilon)) {
    throw std::invalid_argument(
        "calibrate_lln: beta must be below sigma*epsilon (alpha would not be "
        "positive)");
  }
  n.alpha = std::exp(-1.5 * sigma * sigma) * (budget.epsilon - n.beta / sigma);
  return n;
}

CalibratedNoise standard_noise(NoiseKind kind, int dof, double sigma) {
  CalibratedNoise n;
  n.kind = kind;
  n.dof = dof;
  n.sigma = sigma;
  return n;
}

AdmissibilityReport admissibility_spot_check(const CalibratedNoise& noise,
                                             const PrivacyBudget& budget) {
  budget.validate();
  const double bound_factor = std::exp(budget.epsilon / 2.0);
  const double slack = budget.delta / 2.0;

  const double anchors[] = {-20.0, -10.0, -5.0, -2.0, -1.0, -0.5,
                            0.0,   0.5,   1.0,  2.0,  5.0,  10.0};
  const double widths[] = {0.25, 1.0, 4.0};

  AdmissibilityReport report;
  auto prob = [&](double lo, double hi) { return noise.cdf(hi) - noise.cdf(lo); };

  const double shift_fracs[] = {1.0, 0.5, 0.25};
  for (double a : anchors) {
    for (double w : widths) {
      const double p = prob(a, a + w);
      for (double frac : shift_fracs) {
        for (double sign : {-1.0, 1.0}) {
          const double shift = sign * frac * noise.alpha;
          if (shift == 0.0) continue;
          const double q = prob(a + shift, a + w + shift);
          const double excess = p - (bound_factor * q + slack);
          ++report.sliding_checked;
          if (excess > 1e-12) ++report.sliding_violations;
          report.worst_sliding_excess = std::max(report.worst_sliding_excess, excess);
        }
      }
      const double dil_fracs[] = {1.0, 0.5};
      for (double frac : dil_fracs) {
        for (double sign : {-1.0, 1.0}) {
          const double lam = sign * frac * noise.beta;
          if (lam == 0.0) continue;
          const double s = std::exp(lam);
          const double q = prob(std::min(a * s, (a + w) * s), std::max(a * s, (a + w) * s));
          const double excess = p - (bound_factor * q + slack);
          ++report.dilation_checked;
          if (excess > 1e-12) ++report.dilation_violations;
          report.worst_dilation_excess = std::max(report.worst_dilation_excess, excess);
        }
      }
    }
  }
  return report;
}

}  // namespace snm
