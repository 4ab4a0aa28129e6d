#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace aclsim::fem {

/// Gauss-Legendre rule on the reference interval [0, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
  int size() const noexcept { return static_cast<int>(points.size()); }
};

/// n-point Gauss-Legendre rule mapped to [0, 1]; exact for polynomials of degree 2n - 1.
inline QuadratureRule gauss_legendre(int n) {
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

/// Fewest points integrating a polynomial of the given degree exactly.
inline int points_for_degree(int degree) { return degree < 1 ? 1 : (degree + 2) / 2; }

}  // namespace aclsim::fem
