#pragma once

#include <functional>
#include <span>
#include <vector>

namespace snm {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  bool converged = false;
  int panels = 0;
};

// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b]. Panels are
// refined worst-error-first until the summed error estimate drops below
// abs_tol or the panel budget is exhausted. Optional breakpoints seed the
// initial subdivision (useful when the integrand has known kinks).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double a, double b, double abs_tol,
                                    std::span<const double> breakpoints = {},
                                    int max_panels = 4000);

// Nodes and weights for n-point Gauss-Hermite quadrature:
//   integral of exp(-x^2) g(x) dx  ~=  sum w_i g(x_i)
void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& weights);

}  // namespace snm
