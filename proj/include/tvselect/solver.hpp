#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tvselect/basis.hpp"
#include "tvselect/design.hpp"
#include "tvselect/errors.hpp"

namespace tvselect {

enum class Method { TVSelect, VCRidge, GroupLasso, ScreenRefit };
enum class Damping { None, Halving };

/// How a time-varying block is updated inside a sweep.
///  - Exact: minimizes the block subproblem (loss + roughness + group norm)
///    exactly, as a ridge solve with an adaptive shift s = lambda1/||theta||
///    followed by the group selection test ||Z_k^T r/n|| <= lambda1.
///  - SmoothSelect: plain ridge step followed by group soft-thresholding of
///    the ridge estimate. Cheaper, but its fixed points are not minimizers of
///    the penalized objective unless G_k + 2 lambda2 Omega is a multiple of I.
enum class BlockUpdate { Exact, SmoothSelect };

struct PenaltyConfig {
  double lambda1 = 0;
  double lambda2 = 0;
  double epsilon_prox = 1e-8;
};

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 500;
  Damping damping = Damping::Halving;
  std::optional<bool> intercept;  // defaults to design.intercept_included
  BlockUpdate block_update = BlockUpdate::Exact;
  int refresh_every = 50;
  /// With the exact block update, convergence also requires every KKT
  /// residual (see kkt_check) to be below this value. 0 disables the check.
  double kkt_tol = 1e-7;
};

inline void validate(const PenaltyConfig& penalty) {
  if (!(penalty.lambda1 >= 0) || !(penalty.lambda2 >= 0))
    throw ConfigError(fmt::format("penalties must be non-negative (lambda1={}, lambda2={})",
                                  penalty.lambda1, penalty.lambda2));
  if (!(penalty.epsilon_prox > 0)) throw ConfigError("epsilon_prox must be positive");
}

inline void validate(const SolverOptions& options) {
  if (!(options.tol > 0)) throw ConfigError("solver tolerance must be positive");
  if (options.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (options.refresh_every < 1) throw ConfigError("refresh_every must be at least 1");
  if (!(options.kkt_tol >= 0)) throw ConfigError("kkt_tol must be non-negative");
}

template <typename Scalar = double>
struct ModelFit {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar beta0 = 0;
  Vector mu;
  std::vector<Vector> theta;
  std::vector<Scalar> objective_trace;
  int iterations = 0;
  bool converged = false;
  bool intercept = false;
  Method method = Method::TVSelect;
  PenaltyConfig penalty;
  std::shared_ptr<const CenteredSplineBasis<Scalar>> basis;
  /// Blocks left at exact zero by the final sweep's block updates.
  std::vector<bool> zeroed_in_final_sweep;

  int num_covariates() const { return static_cast<int>(mu.size()); }

  /// beta_k(t) = mu_k + B~(t)^T theta_k.
  Scalar coefficient(int k, Scalar t) const { return mu(k) + basis->eval_centered(t).dot(theta[k]); }

  /// g_k''(t) for the fitted deviation.
  Scalar deviation_second_derivative(int k, Scalar t) const {
    return basis->eval_derivative(t, 2).dot(theta[k]);
  }
};

// ---------------------------------------------------------------------------
// Objective and elementary updates

template <typename Scalar>
void check_dimensions(const DesignBlocks<Scalar>& design, const ModelFit<Scalar>& fit) {
  const int p = design.num_covariates();
  if (fit.num_covariates() != p || static_cast<int>(fit.theta.size()) != p)
    throw DimensionError(
        fmt::format("fit has {} covariates, design has {}", fit.num_covariates(), p));
  for (const auto& th : fit.theta)
    if (th.size() != design.basis_size())
      throw DimensionError(
          fmt::format("theta block has length {}, design has q={}", th.size(), design.basis_size()));
}

/// beta0 + X mu + sum_k Z_k theta_k.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fitted_values(const DesignBlocks<Scalar>& design,
                                                       const ModelFit<Scalar>& fit) {
  check_dimensions(design, fit);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = design.X * fit.mu;
  out.array() += fit.beta0;
  for (int k = 0; k < design.num_covariates(); ++k)
    if (!fit.theta[k].isZero(0)) out.noalias() += design.Z[k] * fit.theta[k];
  return out;
}

template <typename Scalar>
Scalar penalty_value(const ModelFit<Scalar>& fit, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& omega) {
  Scalar pen = 0;
  for (const auto& th : fit.theta)
    pen += Scalar(fit.penalty.lambda1) * th.norm() + Scalar(fit.penalty.lambda2) * th.dot(omega * th);
  return pen;
}

/// (1/2n)||y - beta0 - X mu - sum Z_k theta_k||^2 + lambda1 sum ||theta_k||
///   + lambda2 sum theta_k^T Omega theta_k.
template <typename Scalar>
Scalar objective(const DesignBlocks<Scalar>& design, const ModelFit<Scalar>& fit) {
  const auto residual = (design.y - fitted_values(design, fit)).eval();
  const Scalar n = static_cast<Scalar>(design.rows());
  return residual.squaredNorm() / (2 * n) + penalty_value(fit, fit.basis->roughness());
}

/// Least-squares intercept: the mean of y - X mu - sum Z_k theta_k.
template <typename Derived>
typename Derived::Scalar update_intercept(const Eigen::MatrixBase<Derived>& partial_residual) {
  return partial_residual.mean();
}

/// mu_k = x_k^T r / x_k^T x_k.
template <typename DerivedX, typename DerivedR>
typename DerivedX::Scalar update_mu_k(const Eigen::MatrixBase<DerivedX>& x_k,
                                      const Eigen::MatrixBase<DerivedR>& partial_residual) {
  const auto xx = x_k.squaredNorm();
  if (!(xx > 0)) throw DegenerateDesignError("covariate column has zero norm");
  return x_k.dot(partial_residual) / xx;
}

/// (1 - lambda/(||v|| + eps))_+ v, with an exact zero whenever ||v|| <= lambda
/// or the factor is <= 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> group_soft_threshold(
    const Eigen::MatrixBase<Derived>& v, double lambda1, double epsilon_prox = 1e-8) {
  using Scalar = typename Derived::Scalar;
  const Scalar vn = v.norm();
  const Scalar factor = Scalar(1) - Scalar(lambda1) / (vn + Scalar(epsilon_prox));
  if (vn <= Scalar(lambda1) || factor <= 0) return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(v.size());
  return factor * v;
}

/**
 * Per-block system A = G_k + 2 lambda2 Omega, factorized once: a Cholesky
 * factor (with diagonal jitter delta = 1e-10 trace/q when A is singular) for
 * the ridge step, and an eigendecomposition for the exact block minimizer.
 */
template <typename Scalar = double>
class BlockSystem {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BlockSystem() = default;

  BlockSystem(const Matrix& gram, const Matrix& omega, double lambda2)
      : a_(gram + Scalar(2 * lambda2) * omega) {
    const Eigen::Index q = a_.rows();
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success || !pd_enough()) {
      const Scalar trace = a_.trace();
      jitter_ = (trace > 0 ? Scalar(1e-10) * trace / Scalar(q) : Scalar(1e-10));
      llt_.compute(a_ + jitter_ * Matrix::Identity(q, q));
      if (llt_.info() != Eigen::Success)
        throw SingularBlockError("block system is not positive definite after jitter");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a_);
    if (eig.info() != Eigen::Success) throw SingularBlockError("block eigendecomposition failed");
    eigenvalues_ = eig.eigenvalues().cwiseMax(Scalar(0));
    eigenvectors_ = eig.eigenvectors();
  }

  const Matrix& matrix() const { return a_; }
  Scalar jitter() const { return jitter_; }

  /// A^{-1} rhs. With jitter the factor belongs to A + delta I, so a few rounds
  /// of refinement against A itself follow.
  Vector ridge_solve(const Vector& rhs) const {
    Vector x = llt_.solve(rhs);
    if (jitter_ > 0)
      for (int round = 0; round < 3; ++round) x += llt_.solve(rhs - a_ * x);
    return x;
  }

  /// Block objective up to a constant: -c^T theta + theta^T A theta / 2 + lambda1 ||theta||.
  Scalar block_objective(const Vector& c, const Vector& theta, double lambda1) const {
    return -c.dot(theta) + theta.dot(a_ * theta) / 2 + Scalar(lambda1) * theta.norm();
  }

  /// Bound on the size of the terms in block_objective, i.e. its rounding scale.
  Scalar block_objective_magnitude(const Vector& c, const Vector& theta, double lambda1) const {
    const Scalar tn = theta.norm();
    const Scalar amax = eigenvalues_.size() > 0 ? eigenvalues_.maxCoeff() : Scalar(0);
    return c.norm() * tn + amax * tn * tn / 2 + Scalar(lambda1) * tn;
  }

  /// argmin_theta  theta^T A theta / 2 - c^T theta + lambda1 ||theta||.
  /// Zero iff ||c|| <= lambda1; otherwise theta = (A + s I)^{-1} c with s > 0
  /// solving s ||theta(s)|| = lambda1.
  Vector exact_prox(const Vector& c, double lambda1) const {
    const Eigen::Index q = c.size();
    const Scalar cnorm = c.norm();
    const Scalar lam = Scalar(lambda1);
    if (cnorm <= lam) return Vector::Zero(q);
    const Vector cp = eigenvectors_.transpose() * c;
    const Scalar emin = eigenvalues_.minCoeff();
    const Scalar emax = eigenvalues_.maxCoeff();
    if (!(emax > 0)) return Vector::Zero(q);
    if (lam == 0) return ridge_solve(c);

    // h(s) = 1/||theta(s)|| - s/lambda1 is positive left of the root.
    const auto theta_norm = [&](Scalar s) {
      return (cp.array() / (eigenvalues_.array() + s)).matrix().norm();
    };
    Scalar lo = emin * lam / (cnorm - lam);
    Scalar hi = emax * lam / (cnorm - lam);
    Scalar s = hi;
    for (int iter = 0; iter < 200; ++iter) {
      const Scalar tn = theta_norm(s);
      const Scalar h = 1 / tn - s / lam;
      if (h > 0)
        lo = s;
      else
        hi = s;
      if (h == 0 || hi - lo <= std::numeric_limits<Scalar>::epsilon() * 4 * hi) break;
      const Scalar cube = (cp.array().square() / (eigenvalues_.array() + s).cube()).sum();
      const Scalar dh = cube / (tn * tn * tn) - 1 / lam;
      Scalar next = s - h / dh;
      if (!(next > lo && next < hi)) next = (lo + hi) / 2;
      if (std::abs(next - s) <= std::numeric_limits<Scalar>::epsilon() * 4 * s) {
        s = next;
        break;
      }
      s = next;
    }
    return eigenvectors_ * (cp.array() / (eigenvalues_.array() + s)).matrix();
  }

 private:
  bool pd_enough() const {
    const Vector d = llt_.matrixLLT().diagonal();
    const Scalar dmax = d.cwiseAbs().maxCoeff();
    return d.minCoeff() > Scalar(1e-5) * dmax;
  }

  Matrix a_;
  Eigen::LLT<Matrix> llt_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  Scalar jitter_ = 0;
};

/// Ridge smoothing step: (Z_k^T Z_k/n + 2 lambda2 Omega)^{-1} Z_k^T r / n.
template <typename Scalar, typename DerivedZ, typename DerivedR>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ridge_smooth(const BlockSystem<Scalar>& system,
                                                      const Eigen::MatrixBase<DerivedZ>& z_k,
                                                      const Eigen::MatrixBase<DerivedR>& residual) {
  const Scalar n = static_cast<Scalar>(z_k.rows());
  return system.ridge_solve((z_k.transpose() * residual / n).eval());
}

// ---------------------------------------------------------------------------
// Block coordinate descent

struct KktReport {
  /// max over zero blocks of ||Z_k^T e/n|| - lambda1 (<= 0 when feasible).
  double max_inactive_excess = -std::numeric_limits<double>::infinity();
  /// max over nonzero blocks of ||-Z_k^T e/n + 2 lambda2 Omega theta_k + lambda1 theta_k/||theta_k|| ||.
  double max_active_residual = 0;
  /// max |x_k^T e/n| and |1^T e/n| (unpenalized coordinates).
  double max_unpenalized_gradient = 0;

  bool within(double tol) const {
    return max_inactive_excess <= tol && max_active_residual <= tol && max_unpenalized_gradient <= tol;
  }
};

namespace detail {

template <typename Scalar>
KktReport kkt_from_residual(const DesignBlocks<Scalar>& design, const ModelFit<Scalar>& fit,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& residual) {
  const Scalar n = static_cast<Scalar>(design.rows());
  KktReport report;
  if (fit.intercept)
    report.max_unpenalized_gradient = std::abs(static_cast<double>(residual.sum() / n));
  const auto xg = (design.X.transpose() * residual / n).eval();
  if (xg.size() > 0)
    report.max_unpenalized_gradient =
        std::max(report.max_unpenalized_gradient, static_cast<double>(xg.cwiseAbs().maxCoeff()));
  for (int k = 0; k < design.num_covariates(); ++k) {
    const auto g = (design.Z[k].transpose() * residual / n).eval();
    const Scalar tn = fit.theta[k].norm();
    if (tn == 0) {
      report.max_inactive_excess = std::max(
          report.max_inactive_excess, static_cast<double>(g.norm() - Scalar(fit.penalty.lambda1)));
    } else {
      const auto stat = (-g + Scalar(2 * fit.penalty.lambda2) * (fit.basis->roughness() * fit.theta[k]) +
                         Scalar(fit.penalty.lambda1) / tn * fit.theta[k])
                            .eval();
      report.max_active_residual = std::max(report.max_active_residual, static_cast<double>(stat.norm()));
    }
  }
  return report;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_normal_equations(
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    const Scalar trace = gram.trace();
    const Scalar jitter = trace > 0 ? Scalar(1e-10) * trace / Scalar(gram.rows()) : Scalar(1e-10);
    gram.diagonal().array() += jitter;
    llt.compute(gram);
    if (llt.info() != Eigen::Success) throw SingularBlockError("normal equations are singular");
  }
  return llt.solve(rhs);
}

/// Constants-only least squares of y on [1, X] (or X alone).
template <typename Scalar>
std::pair<Scalar, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> constants_only_fit(
    const DesignBlocks<Scalar>& design, bool intercept) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.X.cols();
  const Eigen::Index off = intercept ? 1 : 0;
  Matrix D(n, p + off);
  if (intercept) D.col(0).setOnes();
  D.rightCols(p) = design.X;
  const Vector coef = solve_normal_equations<Scalar>((D.transpose() * D).eval(),
                                                     (D.transpose() * design.y).eval());
  return {intercept ? coef(0) : Scalar(0), coef.tail(p)};
}

template <typename Scalar>
ModelFit<Scalar> run_bcd(const DesignBlocks<Scalar>& design,
                         std::shared_ptr<const CenteredSplineBasis<Scalar>> basis,
                         const PenaltyConfig& penalty, const SolverOptions& options,
                         const std::vector<bool>& active, const ModelFit<Scalar>* warm_start) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  validate(penalty);
  validate(options);
  const int p = design.num_covariates();
  const int q = basis->size();
  const Eigen::Index n_rows = design.rows();
  if (n_rows == 0) throw DimensionError("design has no rows");
  if (design.basis_size() != q || static_cast<int>(design.Z.size()) != p)
    throw DimensionError(fmt::format("design blocks (q={}) do not match basis (q={})",
                                     design.basis_size(), q));
  const Scalar n = static_cast<Scalar>(n_rows);
  const bool intercept = options.intercept.value_or(design.intercept_included);
  const Matrix& omega = basis->roughness();

  Vector xnorm2(p);
  std::vector<BlockSystem<Scalar>> systems(p);
  std::vector<Matrix> grams(p);
  for (int k = 0; k < p; ++k) {
    xnorm2(k) = design.X.col(k).squaredNorm();
    if (!(xnorm2(k) > 0))
      throw DegenerateDesignError(fmt::format("covariate {} has zero norm", k + 1));
    if (!active[k]) continue;
    grams[k] = design.Z[k].transpose() * design.Z[k] / n;
    systems[k] = BlockSystem<Scalar>(grams[k], omega, penalty.lambda2);
  }

  ModelFit<Scalar> fit;
  fit.basis = std::move(basis);
  fit.penalty = penalty;
  fit.intercept = intercept;
  fit.zeroed_in_final_sweep.assign(p, true);
  if (warm_start) {
    check_dimensions(design, *warm_start);
    fit.beta0 = intercept ? warm_start->beta0 : Scalar(0);
    fit.mu = warm_start->mu;
    fit.theta = warm_start->theta;
    for (int k = 0; k < p; ++k)
      if (!active[k]) fit.theta[k].setZero();
  } else {
    auto [b0, mu] = constants_only_fit(design, intercept);
    fit.beta0 = b0;
    fit.mu = mu;
    fit.theta.assign(p, Vector::Zero(q));
  }

  const auto recompute_residual = [&]() {
    Vector r = design.y - design.X * fit.mu;
    r.array() -= fit.beta0;
    for (int k = 0; k < p; ++k)
      if (!fit.theta[k].isZero(0)) r.noalias() -= design.Z[k] * fit.theta[k];
    return r;
  };
  const auto current_objective = [&](const Vector& r) {
    return r.squaredNorm() / (2 * n) + penalty_value(fit, omega);
  };

  Vector residual = recompute_residual();
  Scalar previous = current_objective(residual);
  fit.objective_trace.push_back(previous);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    if (iter % options.refresh_every == 0) residual = recompute_residual();

    if (intercept) {
      const Scalar shift = update_intercept(residual);
      fit.beta0 += shift;
      residual.array() -= shift;
    }
    for (int k = 0; k < p; ++k) {
      const Scalar delta = design.X.col(k).dot(residual) / xnorm2(k);
      fit.mu(k) += delta;
      residual.noalias() -= delta * design.X.col(k);
    }
    for (int k = 0; k < p; ++k) {
      if (!active[k]) continue;
      const Vector& old = fit.theta[k];
      const Vector c = (design.Z[k].transpose() * residual / n + grams[k] * old).eval();
      Vector next;
      if (options.block_update == BlockUpdate::Exact) {
        next = systems[k].exact_prox(c, penalty.lambda1);
      } else {
        next = systems[k].ridge_solve(c);
        if (penalty.lambda1 > 0) next = group_soft_threshold(next, penalty.lambda1, penalty.epsilon_prox);
      }
      if (options.damping == Damping::Halving) {
        const Scalar before = systems[k].block_objective(c, old, penalty.lambda1);
        Scalar after = systems[k].block_objective(c, next, penalty.lambda1);
        const Scalar slack = 64 * std::numeric_limits<Scalar>::epsilon() *
                             (1 + systems[k].block_objective_magnitude(c, old, penalty.lambda1) +
                              systems[k].block_objective_magnitude(c, next, penalty.lambda1));
        int halvings = 0;
        while (after > before + slack && halvings < 20) {
          next = (old + next) / 2;
          after = systems[k].block_objective(c, next, penalty.lambda1);
          ++halvings;
        }
        if (after > before + slack) next = old;
      }
      const Vector step = next - old;
      if (!step.isZero(0)) residual.noalias() -= design.Z[k] * step;
      fit.theta[k] = next;
      fit.zeroed_in_final_sweep[k] = next.isZero(0);
    }

    const Scalar current = current_objective(residual);
    if (!std::isfinite(static_cast<double>(current)))
      throw Error("objective became non-finite during block coordinate descent");
    fit.objective_trace.push_back(current);
    fit.iterations = iter;
    if (std::abs(current - previous) / (1 + previous) < Scalar(options.tol)) {
      const bool certify = options.kkt_tol > 0 && options.block_update == BlockUpdate::Exact;
      if (!certify || kkt_from_residual(design, fit, recompute_residual()).within(options.kkt_tol)) {
        fit.converged = true;
        break;
      }
    }
    previous = current;
  }
  return fit;
}

}  // namespace detail

/**
 * Block coordinate descent on the doubly penalized objective: per sweep the
 * intercept, then mu_1..mu_p by exact coordinate minimization, then each
 * theta_k by the configured block update. Stops when the relative objective
 * change |Q_new - Q_old| / (1 + Q_old) falls below options.tol.
 */
template <typename Scalar>
ModelFit<Scalar> fit_bcd(const DesignBlocks<Scalar>& design,
                         std::shared_ptr<const CenteredSplineBasis<Scalar>> basis,
                         const PenaltyConfig& penalty, const SolverOptions& options = {},
                         const ModelFit<Scalar>* warm_start = nullptr) {
  const std::vector<bool> active(design.num_covariates(), true);
  auto fit = detail::run_bcd(design, std::move(basis), penalty, options, active, warm_start);
  fit.method = Method::TVSelect;
  return fit;
}

inline constexpr double kScreenRefitLambda2 = 1e-4;

/**
 * Competing estimators on the same basis:
 *  - VCRidge: roughness penalty only (lambda1 = 0),
 *  - GroupLasso: group penalty only (lambda2 = 0),
 *  - ScreenRefit: Group-Lasso screening at penalty.lambda1, then a joint
 *    least-squares refit of all constant effects and the screened blocks with
 *    roughness penalty kScreenRefitLambda2.
 */
template <typename Scalar>
ModelFit<Scalar> fit_baseline(const DesignBlocks<Scalar>& design,
                              std::shared_ptr<const CenteredSplineBasis<Scalar>> basis,
                              Method method, const PenaltyConfig& penalty,
                              const SolverOptions& options = {},
                              const ModelFit<Scalar>* warm_start = nullptr) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int p = design.num_covariates();
  const std::vector<bool> all(p, true);
  switch (method) {
    case Method::VCRidge: {
      PenaltyConfig pen = penalty;
      pen.lambda1 = 0;
      auto fit = detail::run_bcd(design, std::move(basis), pen, options, all, warm_start);
      fit.method = Method::VCRidge;
      return fit;
    }
    case Method::GroupLasso: {
      PenaltyConfig pen = penalty;
      pen.lambda2 = 0;
      auto fit = detail::run_bcd(design, std::move(basis), pen, options, all, warm_start);
      fit.method = Method::GroupLasso;
      return fit;
    }
    case Method::ScreenRefit: {
      PenaltyConfig screen_pen = penalty;
      screen_pen.lambda2 = 0;
      const auto screen = detail::run_bcd(design, basis, screen_pen, options, all, warm_start);
      std::vector<int> selected;
      for (int k = 0; k < p; ++k)
        if (!screen.theta[k].isZero(0)) selected.push_back(k);

      const bool intercept = options.intercept.value_or(design.intercept_included);
      const int q = basis->size();
      const Eigen::Index off = intercept ? 1 : 0;
      const Eigen::Index m = off + p + q * static_cast<Eigen::Index>(selected.size());
      const Eigen::Index n_rows = design.rows();
      const Scalar n = static_cast<Scalar>(n_rows);
      Matrix D(n_rows, m);
      if (intercept) D.col(0).setOnes();
      D.middleCols(off, p) = design.X;
      for (std::size_t s = 0; s < selected.size(); ++s)
        D.middleCols(off + p + q * static_cast<Eigen::Index>(s), q) = design.Z[selected[s]];
      Matrix gram = D.transpose() * D / n;
      for (std::size_t s = 0; s < selected.size(); ++s)
        gram.block(off + p + q * s, off + p + q * s, q, q) +=
            Scalar(2 * kScreenRefitLambda2) * basis->roughness();
      const Vector coef =
          detail::solve_normal_equations<Scalar>(gram, (D.transpose() * design.y / n).eval());

      ModelFit<Scalar> fit;
      fit.method = Method::ScreenRefit;
      fit.basis = std::move(basis);
      fit.penalty = PenaltyConfig{0.0, kScreenRefitLambda2, penalty.epsilon_prox};
      fit.intercept = intercept;
      fit.beta0 = intercept ? coef(0) : Scalar(0);
      fit.mu = coef.segment(off, p);
      fit.theta.assign(p, Vector::Zero(q));
      fit.zeroed_in_final_sweep.assign(p, true);
      for (std::size_t s = 0; s < selected.size(); ++s) {
        fit.theta[selected[s]] = coef.segment(off + p + q * static_cast<Eigen::Index>(s), q);
        fit.zeroed_in_final_sweep[selected[s]] = fit.theta[selected[s]].isZero(0);
      }
      fit.objective_trace = {objective(design, fit)};
      fit.iterations = screen.iterations;
      fit.converged = screen.converged;
      return fit;
    }
    case Method::TVSelect:
      return fit_bcd(design, std::move(basis), penalty, options, warm_start);
  }
  throw ConfigError("unknown method");
}

// ---------------------------------------------------------------------------
// Reference solver

struct OracleOptions {
  double tol = 1e-10;
  double gradient_tol = 1e-9;
  int max_iter = 5000000;
  std::optional<bool> intercept;
};

/**
 * Accelerated proximal gradient (FISTA with step 1/lambda_max(H) and function-value
 * restart) on the full parameter vector (beta0, mu, theta). The smooth part is
 * the loss plus roughness penalty, the proximal map is exact block
 * soft-thresholding. Intended as a slow, independent correctness reference.
 */
template <typename Scalar>
ModelFit<Scalar> fit_oracle(const DesignBlocks<Scalar>& design,
                            std::shared_ptr<const CenteredSplineBasis<Scalar>> basis,
                            const PenaltyConfig& penalty, const OracleOptions& options = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  validate(penalty);
  const int p = design.num_covariates();
  const int q = basis->size();
  const bool intercept = options.intercept.value_or(design.intercept_included);
  const Eigen::Index off = intercept ? 1 : 0;
  const Eigen::Index m = off + p + static_cast<Eigen::Index>(p) * q;
  const Scalar n = static_cast<Scalar>(design.rows());

  Matrix D(design.rows(), m);
  if (intercept) D.col(0).setOnes();
  D.middleCols(off, p) = design.X;
  for (int k = 0; k < p; ++k) D.middleCols(off + p + k * q, q) = design.Z[k];
  Matrix H = D.transpose() * D / n;
  for (int k = 0; k < p; ++k)
    H.block(off + p + k * q, off + p + k * q, q, q) += Scalar(2 * penalty.lambda2) * basis->roughness();
  const Vector b = D.transpose() * design.y / n;
  const Scalar yy = design.y.squaredNorm() / (2 * n);
  const Scalar lam1 = Scalar(penalty.lambda1);

  const auto smooth = [&](const Vector& w) { return w.dot(H * w) / 2 - b.dot(w) + yy; };
  const auto nonsmooth = [&](const Vector& w) {
    Scalar s = 0;
    for (int k = 0; k < p; ++k) s += w.segment(off + p + k * q, q).norm();
    return lam1 * s;
  };
  const auto prox = [&](Vector w, Scalar step) {
    for (int k = 0; k < p; ++k) {
      auto blk = w.segment(off + p + k * q, q);
      const Scalar nrm = blk.norm();
      const Scalar thr = lam1 * step;
      if (nrm <= thr)
        blk.setZero();
      else
        blk *= (1 - thr / nrm);
    }
    return w;
  };

  Vector w = Vector::Zero(m), w_prev = w, v = w;
  const Scalar L = std::max(Scalar(1e-12),
                            Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
  Scalar t_mom = 1;
  Scalar f_prev = smooth(w) + nonsmooth(w);
  bool restarted = false;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Vector grad = H * v - b;
    const Vector z = prox(v - grad / L, 1 / L);
    const Scalar gmap = L * (z - v).norm();
    const Scalar f_new = smooth(z) + nonsmooth(z);
    if (f_new > f_prev && !restarted) {
      // Restart momentum from the last iterate.
      t_mom = 1;
      v = w;
      restarted = true;
      continue;
    }
    restarted = false;
    const Scalar t_next = (1 + std::sqrt(1 + 4 * t_mom * t_mom)) / 2;
    w_prev = w;
    w = z;
    v = w + ((t_mom - 1) / t_next) * (w - w_prev);
    t_mom = t_next;
    const bool small_change = std::abs(f_prev - f_new) / (1 + std::abs(f_prev)) < Scalar(options.tol);
    f_prev = f_new;
    if (small_change && gmap < Scalar(options.gradient_tol)) {
      ModelFit<Scalar> fit;
      fit.basis = std::move(basis);
      fit.penalty = penalty;
      fit.intercept = intercept;
      fit.beta0 = intercept ? w(0) : Scalar(0);
      fit.mu = w.segment(off, p);
      fit.theta.resize(p);
      for (int k = 0; k < p; ++k) fit.theta[k] = w.segment(off + p + k * q, q);
      fit.zeroed_in_final_sweep.assign(p, false);
      for (int k = 0; k < p; ++k) fit.zeroed_in_final_sweep[k] = fit.theta[k].isZero(0);
      fit.objective_trace = {f_new};
      fit.iterations = iter;
      fit.converged = true;
      fit.method = Method::TVSelect;
      return fit;
    }
  }
  throw OracleNonconvergenceError(
      fmt::format("proximal gradient oracle did not converge in {} iterations", options.max_iter));
}

// ---------------------------------------------------------------------------
// Prediction and optimality diagnostics

/// beta0 + sum_k x_k (mu_k + B~(t)^T theta_k).
template <typename Scalar, typename Derived>
Scalar predict(const ModelFit<Scalar>& fit, const Eigen::MatrixBase<Derived>& x, Scalar t) {
  if (x.size() != fit.num_covariates())
    throw DimensionError(
        fmt::format("covariate vector has length {}, fit has {}", x.size(), fit.num_covariates()));
  const auto centered = fit.basis->eval_centered(t);
  Scalar out = fit.beta0;
  for (int k = 0; k < fit.num_covariates(); ++k)
    out += x(k) * (fit.mu(k) + centered.dot(fit.theta[k]));
  return out;
}

/// Optimality residuals of a fit on `design`.
template <typename Scalar>
KktReport kkt_check(const DesignBlocks<Scalar>& design, const ModelFit<Scalar>& fit) {
  return detail::kkt_from_residual(design, fit, (design.y - fitted_values(design, fit)).eval());
}

inline std::string to_string(Method method) {
  switch (method) {
    case Method::TVSelect: return "TV-Select";
    case Method::VCRidge: return "VC-Ridge";
    case Method::GroupLasso: return "Group-Lasso";
    case Method::ScreenRefit: return "Screen+Refit";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  if (s == "TV-Select" || s == "tvselect") return Method::TVSelect;
  if (s == "VC-Ridge" || s == "vcridge") return Method::VCRidge;
  if (s == "Group-Lasso" || s == "grouplasso") return Method::GroupLasso;
  if (s == "Screen+Refit" || s == "screenrefit") return Method::ScreenRefit;
  throw ConfigError(fmt::format("unknown method '{}'", s));
}

}  // namespace tvselect
