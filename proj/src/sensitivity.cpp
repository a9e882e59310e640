#include "snm/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace snm {

namespace {

constexpr std::int64_t kEnumerationGuard = 1'000'000;

// One-edit neighbors: one record added (any universe element) or removed.
template <class Fn>
void for_each_neighbor(const Counts& x, Fn&& fn) {
  Counts y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++y[i];
    fn(y);
    --y[i];
    if (y[i] > 0) {
      --y[i];
      fn(y);
      ++y[i];
    }
  }
}

void enumerate_ball_rec(const Counts& x, std::size_t coord, int budget,
                        Counts& current, int used,
                        std::vector<std::pair<Counts, int>>& out) {
  if (coord == x.size()) {
    out.emplace_back(current, used);
    if (static_cast<std::int64_t>(out.size()) > kEnumerationGuard) {
      throw std::runtime_error(
          "sensitivity enumeration exceeds the 10^6 candidate guard; use an "
          "analytic sensitivity formula for this instance");
    }
    return;
  }
  const int lo = -std::min(x[coord], budget);
  for (int d = lo; d <= budget; ++d) {
    current[coord] = x[coord] + d;
    enumerate_ball_rec(x, coord + 1, budget - std::abs(d), current,
                       used + std::abs(d), out);
  }
  current[coord] = x[coord];
}

}  // namespace

int database_size(const Counts& x) {
  return std::accumulate(x.begin(), x.end(), 0);
}

std::vector<double> utility_vector(const UtilityModel& u, const Counts& x) {
  std::vector<double> scores(static_cast<std::size_t>(u.outcome_count));
  for (int r = 0; r < u.outcome_count; ++r) {
    scores[static_cast<std::size_t>(r)] = u.evaluate(x, r);
  }
  return scores;
}

std::int64_t ball_size(const Counts& x, int t) {
  // ways[b] = number of completions with remaining budget b
  std::vector<std::int64_t> ways(static_cast<std::size_t>(t) + 1, 1);
  for (std::size_t coord = x.size(); coord-- > 0;) {
    std::vector<std::int64_t> next(static_cast<std::size_t>(t) + 1, 0);
    for (int b = 0; b <= t; ++b) {
      std::int64_t acc = 0;
      for (int d = -std::min(x[coord], b); d <= b; ++d) {
        acc += ways[static_cast<std::size_t>(b - std::abs(d))];
        if (acc > kEnumerationGuard) return acc;  // early out, caller errors
      }
      next[static_cast<std::size_t>(b)] = acc;
    }
    ways = std::move(next);
  }
  return ways[static_cast<std::size_t>(t)];
}

std::vector<std::pair<Counts, int>> enumerate_ball(const Counts& x, int t) {
  if (ball_size(x, t) > kEnumerationGuard) {
    throw std::runtime_error(
        "sensitivity enumeration exceeds the 10^6 candidate guard; use an "
        "analytic sensitivity formula for this instance");
  }
  std::vector<std::pair<Counts, int>> out;
  Counts current = x;
  enumerate_ball_rec(x, 0, t, current, 0, out);
  return out;
}

double local_sensitivity(const UtilityModel& u, const Counts& x) {
  double worst = 0.0;
  std::vector<double> base = utility_vector(u, x);
  for_each_neighbor(x, [&](const Counts& y) {
    for (int r = 0; r < u.outcome_count; ++r) {
      const double diff =
          std::abs(base[static_cast<std::size_t>(r)] - u.evaluate(y, r));
      if (diff > worst) worst = diff;
    }
  });
  return worst;
}

namespace {

// LS over every candidate in the ball, evaluated in parallel; the per-layer
// running maxima then give LS(x, t) for every t at once.
std::vector<double> layered_local_sensitivity(
    const UtilityModel& u, const std::vector<std::pair<Counts, int>>& ball,
    int max_t, par::Mode mode) {
  const std::int64_t n = static_cast<std::int64_t>(ball.size());
  std::vector<double> ls(static_cast<std::size_t>(n), 0.0);
  auto eval_one = [&](std::int64_t i) {
    ls[static_cast<std::size_t>(i)] =
        local_sensitivity(u, ball[static_cast<std::size_t>(i)].first);
  };
  if (mode == par::Mode::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) eval_one(i);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) eval_one(i);
#else
    for (std::int64_t i = 0; i < n; ++i) eval_one(i);
#endif
  }
  std::vector<double> per_layer(static_cast<std::size_t>(max_t) + 1, 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const int d = ball[static_cast<std::size_t>(i)].second;
    per_layer[static_cast<std::size_t>(d)] =
        std::max(per_layer[static_cast<std::size_t>(d)], ls[static_cast<std::size_t>(i)]);
  }
  for (int t = 1; t <= max_t; ++t) {
    per_layer[static_cast<std::size_t>(t)] =
        std::max(per_layer[static_cast<std::size_t>(t)],
                 per_layer[static_cast<std::size_t>(t - 1)]);
  }
  return per_layer;
}

}  // namespace

double local_sensitivity_at_distance(const UtilityModel& u, const Counts& x,
                                     int t, par::Mode mode) {
  if (t < 0) throw std::invalid_argument("local_sensitivity_at_distance: t >= 0");
  auto ball = enumerate_ball(x, t);
  return layered_local_sensitivity(u, ball, t, mode)[static_cast<std::size_t>(t)];
}

SmoothSensitivity smooth_sensitivity_bruteforce(const UtilityModel& u,
                                                const Counts& x, double beta,
                                                par::Mode mode) {
  if (beta < 0.0) throw std::invalid_argument("smooth sensitivity: beta >= 0");
  const int max_t = database_size(x);
  auto ball = enumerate_ball(x, max_t);
  auto ls_at = layered_local_sensitivity(u, ball, max_t, mode);
  SmoothSensitivity s;
  s.beta = beta;
  for (int t = 0; t <= max_t; ++t) {
    const double v = std::exp(-beta * t) * ls_at[static_cast<std::size_t>(t)];
    if (v > s.value) {
      s.value = v;
      s.witness_t = t;
    }
  }
  return s;
}

SmoothSensitivity smooth_sensitivity(const UtilityModel& u, const Counts& x,
                                     double beta, par::Mode mode) {
  if (u.smooth) return u.smooth(x, beta);
  return smooth_sensitivity_bruteforce(u, x, beta, mode);
}

SmoothSensitivity indicator_gap_smooth_sensitivity(
    std::span<const std::int64_t> scores, double beta) {
  if (scores.empty()) {
    throw std::invalid_argument("indicator gap: at least one score required");
  }
  if (beta < 0.0) throw std::invalid_argument("indicator gap: beta >= 0");
  SmoothSensitivity s;
  s.beta = beta;
  if (scores.size() == 1) {  // a single outcome never changes the indicator
    s.value = 0.0;
    s.witness_t = 0;
    return s;
  }
  std::size_t leader = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[leader]) leader = i;
  }
  std::int64_t flip = std::numeric_limits<std::int64_t>::max();
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (c == leader) continue;
    const std::int64_t d =
        scores[leader] - scores[c] + (c > leader ? 1 : 0);
    flip = std::min(flip, d);
  }
  const std::int64_t threshold = std::max<std::int64_t>(flip - 1, 0);
  s.witness_t = static_cast<int>(threshold);
  s.value = std::exp(-beta * static_cast<double>(threshold));
  return s;
}

SmoothBoundReport verify_smooth_bound(
    const UtilityModel& u, const std::function<double(const Counts&)>& bound,
    double beta, int universe_size, int max_db_size) {
  SmoothBoundReport report;

  // every multiset of at most max_db_size records over the universe
  std::vector<Counts> all;
  Counts current(static_cast<std::size_t>(universe_size), 0);
  std::function<void(int, int)> gen = [&](int coord, int remaining) {
    if (coord == universe_size) {
      all.push_back(current);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      current[static_cast<std::size_t>(coord)] = c;
      gen(coord + 1, remaining - c);
    }
    current[static_cast<std::size_t>(coord)] = 0;
  };
  gen(0, max_db_size);

  constexpr double kTol = 1e-12;
  for (const Counts& x : all) {
    ++report.databases_checked;
    const double sx = bound(x);
    const double lsx = local_sensitivity(u, x);
    if (sx < lsx - kTol) {
      report.violations.push_back({x, {}, "lower_bound", sx, lsx});
    }
    for_each_neighbor(x, [&](const Counts& y) {
      ++report.pairs_checked;
      const double sy = bound(y);
      if (sx > std::exp(beta) * sy + kTol) {
        report.violations.push_back({x, y, "neighbor_ratio", sx, std::exp(beta) * sy});
      }
    });
  }
  return report;
}

}  // namespace snm
