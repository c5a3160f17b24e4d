#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "tvselect/errors.hpp"

namespace tvselect {

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact for polynomials of degree <= 2n - 1.
template <typename Scalar = double>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre(int n) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (n < 1) throw ConfigError("gauss_legendre: node count must be positive");
  Vector nodes(n), weights(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th root.
    Scalar x = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) /
                        (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= std::numeric_limits<Scalar>::epsilon() * 4) break;
    }
    // Recompute the derivative at the converged node.
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? Scalar(1) : n * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    nodes(i) = -x;
    nodes(n - 1 - i) = x;
    weights(i) = w;
    weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) nodes(n / 2) = 0;
  return {nodes, weights};
}

/// Integrate f over [a, b] with n-point Gauss-Legendre.
template <typename Scalar, typename F>
Scalar integrate_gauss(F&& f, Scalar a, Scalar b, int n) {
  const auto [x, w] = gauss_legendre<Scalar>(n);
  const Scalar mid = (a + b) / 2, half = (b - a) / 2;
  Scalar sum = 0;
  for (int i = 0; i < n; ++i) sum += w(i) * f(mid + half * x(i));
  return sum * half;
}

/// Composite Gauss-Legendre: `cells` equal cells with n nodes each.
template <typename Scalar, typename F>
Scalar integrate_composite(F&& f, Scalar a, Scalar b, int cells, int n) {
  const auto [x, w] = gauss_legendre<Scalar>(n);
  const Scalar h = (b - a) / cells;
  Scalar sum = 0;
  for (int c = 0; c < cells; ++c) {
    const Scalar lo = a + h * c;
    const Scalar mid = lo + h / 2;
    Scalar cell = 0;
    for (int i = 0; i < n; ++i) cell += w(i) * f(mid + h / 2 * x(i));
    sum += cell * h / 2;
  }
  return sum;
}

}  // namespace tvselect
