#include "tvselect/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tvselect/errors.hpp"
#include "tvselect/structure.hpp"

namespace tvselect {

namespace {

void check_descending(const std::vector<double>& values, const char* name) {
  if (values.empty()) throw ConfigError(fmt::format("{} grid is empty", name));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0)) throw ConfigError(fmt::format("{} grid values must be positive", name));
    if (i > 0 && !(values[i] < values[i - 1]))
      throw ConfigError(fmt::format("{} grid must be strictly descending", name));
  }
}

struct GridSurface {
  Eigen::MatrixXd values;
  Fit best;
  int best_i = -1;
  int best_j = -1;
};

// Surface over l1 x l2 with warm starts down each l1 column; the first strict
// minimum in (l1 desc, l2 desc) order wins.
template <typename FitFn, typename ScoreFn>
GridSurface scan_grid(const std::vector<double>& l1s, const std::vector<double>& l2s, FitFn&& fit_at,
                      ScoreFn&& score) {
  GridSurface s;
  s.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(l1s.size()),
                                       static_cast<Eigen::Index>(l2s.size()),
                                       std::numeric_limits<double>::infinity());
  std::vector<std::vector<Fit>> fits(l1s.size(), std::vector<Fit>(l2s.size()));
  std::vector<std::vector<bool>> ok(l1s.size(), std::vector<bool>(l2s.size(), false));
  for (std::size_t j = 0; j < l2s.size(); ++j) {
    const Fit* warm = nullptr;
    for (std::size_t i = 0; i < l1s.size(); ++i) {
      try {
        fits[i][j] = fit_at(l1s[i], l2s[j], warm);
        s.values(i, j) = score(fits[i][j]);
        ok[i][j] = true;
        warm = &fits[i][j];
      } catch (const Error&) {
        warm = nullptr;
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < l1s.size(); ++i)
    for (std::size_t j = 0; j < l2s.size(); ++j)
      if (ok[i][j] && (s.best_i < 0 || s.values(i, j) < best)) {
        best = s.values(i, j);
        s.best_i = static_cast<int>(i);
        s.best_j = static_cast<int>(j);
      }
  if (s.best_i < 0) throw TuningError("every grid point failed to fit");
  s.best = std::move(fits[s.best_i][s.best_j]);
  return s;
}

}  // namespace

void validate(const TuningGrid& grid) {
  check_descending(grid.lambda1_values, "lambda1");
  check_descending(grid.lambda2_values, "lambda2");
  if (!(grid.gamma >= 0 && grid.gamma <= 1)) throw ConfigError("gamma must lie in [0,1]");
}

std::vector<double> log_spaced(double hi, double lo, int n) {
  if (n < 1) throw ConfigError("grid size must be positive");
  if (!(hi > 0 && lo > 0)) throw ConfigError("log-spaced grid endpoints must be positive");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = hi;
    return out;
  }
  const double a = std::log(hi), b = std::log(lo);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = hi;
  out.back() = lo;
  return out;
}

TuningGrid default_grid(double lambda1_max_value, int n_lambda1, int n_lambda2) {
  TuningGrid grid;
  const double top = lambda1_max_value > 0 ? lambda1_max_value : 1e-8;
  grid.lambda1_values = log_spaced(top, 1e-3 * top, n_lambda1);
  grid.lambda2_values = log_spaced(1.0, 1e-4, n_lambda2);
  return grid;
}

double lambda1_max(const Design& design, std::optional<bool> intercept) {
  const bool use_intercept = intercept.value_or(design.intercept_included);
  const auto [b0, mu] = detail::constants_only_fit(design, use_intercept);
  Eigen::VectorXd residual = design.y - design.X * mu;
  residual.array() -= b0;
  const double n = static_cast<double>(design.rows());
  double out = 0;
  for (const auto& z : design.Z) out = std::max(out, (z.transpose() * residual / n).norm());
  return out;
}

double ebic(const Fit& fit, const Design& design, double gamma) {
  const double n = static_cast<double>(design.rows());
  const double p = design.num_covariates();
  const double q = design.basis_size();
  const double rss = (design.y - fitted_values(design, fit)).squaredNorm();
  if (rss == 0) return -std::numeric_limits<double>::infinity();
  const double s = static_cast<double>(select_vary(fit).size());
  const double df = p + q * s;
  return std::log(rss / n) + std::log(n) / n * df + 2 * gamma * std::log(p) / n * s;
}

TuningResult tune_ebic(const Design& design, std::shared_ptr<const Basis> basis,
                       const TuningGrid& grid, const SolverOptions& options, Method method) {
  validate(grid);
  TuningResult result;
  result.method = method;
  const Method path_method = method == Method::ScreenRefit ? Method::GroupLasso : method;
  std::vector<double> l1s = grid.lambda1_values;
  std::vector<double> l2s = grid.lambda2_values;
  if (path_method == Method::GroupLasso) l2s = {0.0};
  if (path_method == Method::VCRidge) l1s = {0.0};

  auto surface = scan_grid(
      l1s, l2s,
      [&](double l1, double l2, const Fit* warm) {
        return fit_baseline(design, basis, path_method, PenaltyConfig{l1, l2}, options, warm);
      },
      [&](const Fit& f) { return ebic(f, design, grid.gamma); });

  result.criterion_surface = std::move(surface.values);
  result.lambda1_values = l1s;
  result.lambda2_values = l2s;
  result.best_lambda1 = l1s[surface.best_i];
  result.best_lambda2 = l2s[surface.best_j];
  if (method == Method::ScreenRefit) {
    result.best_fit = fit_baseline(design, basis, Method::ScreenRefit,
                                   PenaltyConfig{result.best_lambda1, 0.0}, options);
  } else {
    result.best_fit = std::move(surface.best);
  }
  return result;
}

std::vector<int> assign_folds(const std::vector<std::string>& subject_ids, int K,
                              std::uint64_t seed) {
  const int N = static_cast<int>(subject_ids.size());
  if (K < 2) throw ConfigError(fmt::format("cross-validation needs K >= 2, got {}", K));
  if (K > N) throw ConfigError(fmt::format("K = {} exceeds the number of subjects ({})", K, N));
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return subject_ids[a] < subject_ids[b]; });
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is fixed across
  // standard library implementations.
  for (int i = N - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold(N);
  for (int pos = 0; pos < N; ++pos) fold[order[pos]] = pos % K;
  return fold;
}

TuningResult tune_cv(const LongitudinalDataset& dataset, std::shared_ptr<const Basis> basis,
                     const TuningGrid& grid, int K, std::uint64_t seed,
                     const SolverOptions& options, Method method) {
  validate(grid);
  std::vector<std::string> ids;
  ids.reserve(dataset.subjects.size());
  for (const auto& s : dataset.subjects) ids.push_back(s.subject_id);
  const std::vector<int> fold = assign_folds(ids, K, seed);
  const Design full = build_design(dataset, *basis);

  const Method path_method = method == Method::ScreenRefit ? Method::GroupLasso : method;
  std::vector<double> l1s = grid.lambda1_values;
  std::vector<double> l2s = grid.lambda2_values;
  if (path_method == Method::GroupLasso) l2s = {0.0};
  if (path_method == Method::VCRidge) l1s = {0.0};

  Eigen::MatrixXd sse = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l1s.size()),
                                              static_cast<Eigen::Index>(l2s.size()));
  Eigen::MatrixXi failures = Eigen::MatrixXi::Zero(sse.rows(), sse.cols());
  double held_rows = 0;
  for (int f = 0; f < K; ++f) {
    std::vector<bool> train(ids.size()), test(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      train[i] = fold[i] != f;
      test[i] = fold[i] == f;
    }
    const Design train_design = subset_rows(full, train);
    const Design test_design = subset_rows(full, test);
    held_rows += static_cast<double>(test_design.rows());
    for (std::size_t j = 0; j < l2s.size(); ++j) {
      std::optional<Fit> warm;
      for (std::size_t i = 0; i < l1s.size(); ++i) {
        try {
          Fit fit = fit_baseline(train_design, basis, method, PenaltyConfig{l1s[i], l2s[j]}, options,
                                 warm ? &*warm : nullptr);
          sse(i, j) += (test_design.y - fitted_values(test_design, fit)).squaredNorm();
          warm = std::move(fit);
        } catch (const Error&) {
          failures(i, j) += 1;
          warm.reset();
        }
      }
    }
  }

  TuningResult result;
  result.method = method;
  result.lambda1_values = l1s;
  result.lambda2_values = l2s;
  result.criterion_surface = sse / held_rows;
  int bi = -1, bj = -1;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sse.rows(); ++i)
    for (Eigen::Index j = 0; j < sse.cols(); ++j) {
      if (failures(i, j) > 0) {
        result.criterion_surface(i, j) = std::numeric_limits<double>::infinity();
        continue;
      }
      if (bi < 0 || result.criterion_surface(i, j) < best) {
        best = result.criterion_surface(i, j);
        bi = static_cast<int>(i);
        bj = static_cast<int>(j);
      }
    }
  if (bi < 0) throw TuningError("every grid point failed in cross-validation");
  result.best_lambda1 = l1s[bi];
  result.best_lambda2 = l2s[bj];
  result.best_fit = fit_baseline(full, basis, method,
                                 PenaltyConfig{result.best_lambda1, result.best_lambda2}, options);
  return result;
}

void write_surface_csv(std::ostream& out, const TuningResult& result) {
  out << "lambda1,lambda2,criterion\n";
  for (std::size_t i = 0; i < result.lambda1_values.size(); ++i)
    for (std::size_t j = 0; j < result.lambda2_values.size(); ++j)
      fmt::print(out, "{:.17g},{:.17g},{:.17g}\n", result.lambda1_values[i],
                 result.lambda2_values[j],
                 result.criterion_surface(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

}  // namespace tvselect
