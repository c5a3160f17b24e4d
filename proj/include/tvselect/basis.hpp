#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tvselect/errors.hpp"
#include "tvselect/quadrature.hpp"

namespace tvselect {

enum class KnotPlacement { EquallySpaced, TimeQuantiles };

struct SplineConfig {
  int degree = 3;
  int num_internal_knots = 4;
  KnotPlacement placement = KnotPlacement::EquallySpaced;

  int num_basis() const { return num_internal_knots + degree + 1; }
};

inline constexpr int kMaxSplineDegree = 10;

inline void validate(const SplineConfig& config) {
  if (config.degree < 0 || config.degree > kMaxSplineDegree)
    throw ConfigError(fmt::format("spline degree must be in [0, {}], got {}", kMaxSplineDegree,
                                  config.degree));
  if (config.num_internal_knots < 0)
    throw ConfigError(
        fmt::format("internal knot count must be non-negative, got {}", config.num_internal_knots));
}

/**
 * Clamped B-spline basis of degree d on [0,1] together with its centered
 * variant B~(t) = B(t) - Bbar, where Bbar_l is the integral of B_l over [0,1],
 * and the roughness matrix Omega = int B~''(t) B~''(t)^T dt.
 *
 * Immutable after construction.
 */
template <typename Scalar = double>
class CenteredSplineBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  /// Builds the basis from explicit interior knots, which must be strictly
  /// increasing and strictly inside (0,1).
  CenteredSplineBasis(const SplineConfig& config, const Vector& interior_knots)
      : config_(config), interior_(interior_knots) {
    validate(config_);
    if (interior_.size() != config_.num_internal_knots)
      throw ConfigError(fmt::format("expected {} interior knots, got {}",
                                    config_.num_internal_knots, interior_.size()));
    for (Eigen::Index i = 0; i < interior_.size(); ++i) {
      if (!(interior_(i) > 0 && interior_(i) < 1))
        throw ConfigError("interior knots must lie strictly inside (0,1)");
      if (i > 0 && !(interior_(i) > interior_(i - 1)))
        throw ConfigError("interior knots must be strictly increasing");
    }
    const int d = config_.degree;
    const int K = config_.num_internal_knots;
    knots_.resize(K + 2 * (d + 1));
    knots_.head(d + 1).setZero();
    knots_.segment(d + 1, K) = interior_;
    knots_.tail(d + 1).setOnes();

    means_ = Vector::Zero(size());
    const auto [x, w] = gauss_legendre<Scalar>(d + 1);
    for_each_interval([&](Scalar lo, Scalar hi) {
      const Scalar mid = (lo + hi) / 2, half = (hi - lo) / 2;
      for (Eigen::Index g = 0; g < x.size(); ++g) means_ += (w(g) * half) * eval_raw(mid + half * x(g));
    });
    omega_ = roughness_matrix(d + 1);
  }

  int size() const { return config_.num_basis(); }
  int degree() const { return config_.degree; }
  const SplineConfig& config() const { return config_; }
  const Vector& knots() const { return knots_; }
  const Vector& interior_knots() const { return interior_; }
  const Vector& means() const { return means_; }
  const Matrix& roughness() const { return omega_; }

  /// B(t). Entries are non-negative and sum to one.
  Vector eval_raw(Scalar t) const { return eval_derivative(t, 0); }

  /// B~(t) = B(t) - Bbar.
  Vector eval_centered(Scalar t) const { return eval_raw(t) - means_; }

  /// d^order/dt^order B(t). For order >= 1 this equals the derivative of B~.
  Vector eval_derivative(Scalar t, int order) const {
    check_domain(t);
    const int d = config_.degree;
    const int span = find_span(t);
    Vector out = Vector::Zero(size());
    if (order > d) return out;
    const Matrix ders = basis_derivatives(span, t, order);
    for (int j = 0; j <= d; ++j) out(span - d + j) = ders(order, j);
    return out;
  }

  /// Omega assembled with `nodes` Gauss-Legendre points per knot interval.
  Matrix roughness_matrix(int nodes) const {
    const int q = size();
    Matrix omega = Matrix::Zero(q, q);
    if (config_.degree < 2) return omega;
    const auto [x, w] = gauss_legendre<Scalar>(nodes);
    for_each_interval([&](Scalar lo, Scalar hi) {
      const Scalar mid = (lo + hi) / 2, half = (hi - lo) / 2;
      for (Eigen::Index g = 0; g < x.size(); ++g) {
        const Vector b2 = eval_derivative(mid + half * x(g), 2);
        omega.noalias() += (w(g) * half) * b2 * b2.transpose();
      }
    });
    // Symmetrize away rounding in the rank-one accumulation.
    return (omega + omega.transpose()) / 2;
  }

  /// Calls f(lo, hi) for every non-degenerate knot interval in [0,1].
  template <typename F>
  void for_each_interval(F&& f) const {
    Scalar lo = 0;
    for (Eigen::Index i = 0; i <= interior_.size(); ++i) {
      const Scalar hi = i < interior_.size() ? interior_(i) : Scalar(1);
      f(lo, hi);
      lo = hi;
    }
  }

 private:
  static void check_domain(Scalar t) {
    if (!(t >= 0 && t <= 1))
      throw DomainError(fmt::format("time {} outside [0,1]", static_cast<double>(t)));
  }

  // Index i with knots[i] <= t < knots[i+1]; t == 1 maps to the last span.
  int find_span(Scalar t) const {
    const int d = config_.degree;
    const int last = size() - 1;
    if (t >= knots_(last + 1)) return last;
    int lo = d, hi = last + 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (t < knots_(mid))
        hi = mid;
      else
        lo = mid;
    }
    return lo;
  }

  // Nonzero basis functions N_{span-d..span} and their derivatives up to
  // `n` at t (de Boor triangular scheme). Row k holds the k-th derivative.
  Matrix basis_derivatives(int span, Scalar t, int n) const {
    const int d = config_.degree;
    Matrix ndu(d + 1, d + 1);
    Vector left(d + 1), right(d + 1);
    ndu(0, 0) = 1;
    for (int j = 1; j <= d; ++j) {
      left(j) = t - knots_(span + 1 - j);
      right(j) = knots_(span + j) - t;
      Scalar saved = 0;
      for (int r = 0; r < j; ++r) {
        ndu(j, r) = right(r + 1) + left(j - r);
        const Scalar temp = ndu(r, j - 1) / ndu(j, r);
        ndu(r, j) = saved + right(r + 1) * temp;
        saved = left(j - r) * temp;
      }
      ndu(j, j) = saved;
    }
    Matrix ders = Matrix::Zero(n + 1, d + 1);
    for (int j = 0; j <= d; ++j) ders(0, j) = ndu(j, d);
    if (n == 0) return ders;

    Matrix a(2, d + 1);
    for (int r = 0; r <= d; ++r) {
      int s1 = 0, s2 = 1;
      a(0, 0) = 1;
      for (int k = 1; k <= n; ++k) {
        Scalar acc = 0;
        const int rk = r - k, pk = d - k;
        if (r >= k) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          acc = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = rk >= -1 ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : d - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          acc += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
          acc += a(s2, k) * ndu(r, pk);
        }
        ders(k, r) = acc;
        std::swap(s1, s2);
      }
    }
    Scalar factor = d;
    for (int k = 1; k <= n; ++k) {
      ders.row(k) *= factor;
      factor *= (d - k);
    }
    return ders;
  }

  SplineConfig config_;
  Vector interior_;
  Vector knots_;
  Vector means_;
  Matrix omega_;
};

/// Interior knots for `config`; TimeQuantiles places them at the j/(K+1)
/// empirical quantiles of `times`.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> place_knots(const SplineConfig& config,
                                                     std::span<const Scalar> times) {
  validate(config);
  const int K = config.num_internal_knots;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> knots(K);
  for (const Scalar t : times)
    if (!(t >= 0 && t <= 1))
      throw DomainError(fmt::format("observed time {} outside [0,1]", static_cast<double>(t)));
  if (config.placement == KnotPlacement::EquallySpaced) {
    for (int j = 0; j < K; ++j) knots(j) = Scalar(j + 1) / Scalar(K + 1);
    return knots;
  }
  if (K == 0) return knots;
  std::vector<Scalar> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (sorted.empty() || distinct < K)
    throw DegenerateDesignError(
        fmt::format("quantile knots need at least {} distinct times, found {}", K, distinct));
  sorted.assign(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<Scalar>(sorted.size() - 1);
  for (int j = 0; j < K; ++j) {
    const Scalar pos = m * Scalar(j + 1) / Scalar(K + 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const Scalar frac = pos - Scalar(lo);
    knots(j) = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    if (!(knots(j) > 0 && knots(j) < 1) || (j > 0 && !(knots(j) > knots(j - 1))))
      throw DegenerateDesignError(
          fmt::format("time quantiles do not give {} distinct interior knots", K));
  }
  return knots;
}

template <typename Scalar = double>
CenteredSplineBasis<Scalar> build_basis(const SplineConfig& config,
                                        std::span<const Scalar> observed_times = {}) {
  return CenteredSplineBasis<Scalar>(config, place_knots<Scalar>(config, observed_times));
}

template <typename Scalar>
auto eval_raw(const CenteredSplineBasis<Scalar>& basis, Scalar t) {
  return basis.eval_raw(t);
}

template <typename Scalar>
auto eval_centered(const CenteredSplineBasis<Scalar>& basis, Scalar t) {
  return basis.eval_centered(t);
}

/// v^T Omega v, the integrated squared second derivative of t -> B~(t)^T v.
template <typename Scalar, typename Derived>
Scalar roughness_quadratic_form(const CenteredSplineBasis<Scalar>& basis,
                                const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != basis.size())
    throw DimensionError(
        fmt::format("coefficient vector has length {}, basis has {}", v.size(), basis.size()));
  return v.dot(basis.roughness() * v);
}

inline std::string to_string(KnotPlacement placement) {
  return placement == KnotPlacement::EquallySpaced ? "equally_spaced" : "time_quantiles";
}

inline KnotPlacement knot_placement_from_string(const std::string& s) {
  if (s == "equally_spaced") return KnotPlacement::EquallySpaced;
  if (s == "time_quantiles") return KnotPlacement::TimeQuantiles;
  throw ConfigError(fmt::format("unknown knot placement '{}'", s));
}

}  // namespace tvselect
