#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvselect/basis.hpp"
#include "tvselect/dataset.hpp"
#include "tvselect/design.hpp"
#include "tvselect/solver.hpp"

namespace tvselect {

using Basis = CenteredSplineBasis<double>;
using Design = DesignBlocks<double>;
using Fit = ModelFit<double>;

/// Penalty grids, each sorted strictly descending, and the EBIC gamma.
struct TuningGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  double gamma = 0.5;
};

void validate(const TuningGrid& grid);

/// n log-spaced values from hi down to lo (inclusive).
std::vector<double> log_spaced(double hi, double lo, int n);

/// 20 lambda1 values from lambda1_max down to 1e-3 lambda1_max and 5 lambda2
/// values from 1 down to 1e-4.
TuningGrid default_grid(double lambda1_max, int n_lambda1 = 20, int n_lambda2 = 5);

struct TuningResult {
  Method method = Method::TVSelect;
  double best_lambda1 = 0;
  double best_lambda2 = 0;
  /// Rows follow lambda1_values, columns lambda2_values. Failed fits are +inf.
  Eigen::MatrixXd criterion_surface;
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  Fit best_fit;
};

/// max_k ||Z_k^T y0 / n|| with y0 the residual of the constants-only fit.
double lambda1_max(const Design& design, std::optional<bool> intercept = std::nullopt);

/// log(RSS/n) + log(n)/n * (p + q|S_vary|) + 2 gamma log(p)/n * |S_vary|.
/// Returns -infinity when RSS is exactly zero.
double ebic(const Fit& fit, const Design& design, double gamma);

/**
 * Fits every grid point (warm-started down the lambda1 path at each lambda2),
 * scores it by EBIC and returns the minimizer; ties go to the larger lambda1,
 * then the larger lambda2. Group-Lasso ignores the lambda2 grid (lambda2 = 0),
 * VC-Ridge ignores the lambda1 grid (lambda1 = 0), and Screen+Refit tunes its
 * Group-Lasso screen by EBIC and refits at the selected lambda1.
 */
TuningResult tune_ebic(const Design& design, std::shared_ptr<const Basis> basis,
                       const TuningGrid& grid, const SolverOptions& options = {},
                       Method method = Method::TVSelect);

/// Subject-wise fold labels in [0, K): ids are ordered, shuffled with `seed`
/// and dealt round-robin, so the labels depend only on (ids, K, seed).
std::vector<int> assign_folds(const std::vector<std::string>& subject_ids, int K,
                              std::uint64_t seed);

/**
 * Subject-wise K-fold cross-validation: the criterion is the pooled mean
 * squared prediction error on held-out subjects. The best pair is refit on
 * all data.
 */
TuningResult tune_cv(const LongitudinalDataset& dataset, std::shared_ptr<const Basis> basis,
                     const TuningGrid& grid, int K, std::uint64_t seed,
                     const SolverOptions& options = {}, Method method = Method::TVSelect);

/// lambda1,lambda2,criterion rows at 17 significant digits.
void write_surface_csv(std::ostream& out, const TuningResult& result);

}  // namespace tvselect
