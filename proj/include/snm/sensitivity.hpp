#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snm/parallel.hpp"

namespace snm {

// A database is a multiset of records over a declared finite universe,
// stored as one count per universe element. The neighbor distance is the
// multiset symmetric difference, i.e. the L1 distance between count vectors;
// one edit is one record added or removed (a replacement costs 2).
using Counts = std::vector<int>;

int database_size(const Counts& x);

struct SmoothSensitivity {
  double value = 0.0;
  double beta = 0.0;
  int witness_t = 0;  // smallest t attaining the max
};

// Utility function over (database, outcome) plus its sensitivity
// descriptors. The analytic callbacks are optional accelerators; when absent
// the brute-force enumeration below is used instead.
struct UtilityModel {
  int outcome_count = 0;
  std::function<double(const Counts&, int)> evaluate;
  double global_sensitivity = 1.0;
  bool monotonic = false;
  std::function<double(const Counts&, int)> local_at_distance;        // LS(x, t)
  std::function<SmoothSensitivity(const Counts&, double)> smooth;     // S_beta(x)
};

std::vector<double> utility_vector(const UtilityModel& u, const Counts& x);

// Number of databases within L1 distance t of x (without materializing).
std::int64_t ball_size(const Counts& x, int t);

// All databases within distance t of x, paired with their distance. Throws
// std::runtime_error when the ball exceeds the 10^6 enumeration guard; use
// an analytic path in that case.
std::vector<std::pair<Counts, int>> enumerate_ball(const Counts& x, int t);

// LS_u(x): max over outcomes and one-edit neighbors of |u(x,r) - u(y,r)|.
double local_sensitivity(const UtilityModel& u, const Counts& x);

// LS_u(x, t): max of LS_u(y) over all y within distance t (brute force).
double local_sensitivity_at_distance(const UtilityModel& u, const Counts& x,
                                     int t,
                                     par::Mode mode = par::Mode::kOpenMP);

// max over t in 0..|x| of e^{-t beta} LS_u(x, t), enumerated exhaustively.
SmoothSensitivity smooth_sensitivity_bruteforce(
    const UtilityModel& u, const Counts& x, double beta,
    par::Mode mode = par::Mode::kOpenMP);

// Uses the model's analytic formula when present, brute force otherwise.
SmoothSensitivity smooth_sensitivity(const UtilityModel& u, const Counts& x,
                                     double beta,
                                     par::Mode mode = par::Mode::kOpenMP);

// Exact smooth sensitivity of an indicator-of-argmax utility over integer
// scores (leaf label counts, MaxOp values), with argmax ties resolved to the
// lowest index. The indicator changes once the runner-up catches the leader,
// which takes gap edits plus one more when the challenger's index is higher
// (a tie alone does not move a lowest-index argmax); databases one edit short
// of that are already fully sensitive. Scores must move by at most one per
// edit for this to be exact, which holds for label counts and is an upper
// bound for MaxOp tables.
SmoothSensitivity indicator_gap_smooth_sensitivity(
    std::span<const std::int64_t> scores, double beta);

struct SmoothBoundViolation {
  Counts x;
  Counts y;          // empty for the S(x) >= LS(x) kind
  std::string kind;  // "lower_bound" or "neighbor_ratio"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct SmoothBoundReport {
  int databases_checked = 0;
  int pairs_checked = 0;
  std::vector<SmoothBoundViolation> violations;
  bool passed() const { return violations.empty(); }
};

// Exhaustively verifies that `bound` is a beta-smooth upper bound on the
// local sensitivity of u: S(x) >= LS(x) for every database up to
// max_db_size records over the universe, and S(x) <= e^beta S(y) for every
// neighbor pair. Returns the violations found (empty means the bound holds).
SmoothBoundReport verify_smooth_bound(
    const UtilityModel& u, const std::function<double(const Counts&)>& bound,
    double beta, int universe_size, int max_db_size);

}  // namespace snm
