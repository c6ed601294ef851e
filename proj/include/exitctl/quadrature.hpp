#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace exitctl {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Composite Gauss-Legendre quadrature of f over [a, b].
template <class F>
double integrate_gl(F&& f, double a, double b, int panels = 16, int order = 8) {
  static thread_local int cached_order = 0;
  static thread_local std::pair<std::vector<double>, std::vector<double>> rule;
  if (cached_order != order) {
    rule = gauss_legendre(order);
    cached_order = order;
  }
  const double hw = 0.5 * (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (2 * p + 1) * hw;
    for (int i = 0; i < order; ++i) sum += rule.second[i] * f(mid + hw * rule.first[i]);
  }
  return sum * hw;
}

}  // namespace exitctl
