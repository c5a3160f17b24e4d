#include "tvselect/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tvselect/errors.hpp"
#include "tvselect/quadrature.hpp"

namespace tvselect {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kNumTemplates = 6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Lower Cholesky factor of the Toeplitz matrix c^{|j-l|}.
Eigen::MatrixXd ar1_cholesky(int dim, double c) {
  Eigen::MatrixXd cov(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int l = 0; l < dim; ++l) cov(j, l) = std::pow(c, std::abs(j - l));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("AR(1) correlation matrix is not positive definite");
  return llt.matrixL();
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

// ---------------------------------------------------------------------------
// Scenario specification

int default_basis_size(int N, int n_i, int p) {
  const long n = static_cast<long>(N) * n_i;
  if (n <= 1000) return 8;
  return p <= 200 ? 10 : 12;
}

ScenarioSpec apply_scenario_constraints(ScenarioSpec spec) {
  switch (spec.scenario) {
    case Scenario::A:
      spec.covariate_design = CovariateDesign::Baseline;
      spec.time_design = TimeDesign::Irregular;
      spec.error_model = ErrorModel::Gauss;
      break;
    case Scenario::B:
      spec.covariate_design = CovariateDesign::Baseline;
      spec.time_design = TimeDesign::Irregular;
      spec.error_model = ErrorModel::Gauss;
      spec.rho = 0.6;
      break;
    case Scenario::C:
      spec.covariate_design = CovariateDesign::Baseline;
      spec.time_design = TimeDesign::Regular;
      spec.error_model = ErrorModel::AR1;
      break;
    case Scenario::D:
      spec.covariate_design = CovariateDesign::Baseline;
      spec.time_design = TimeDesign::Irregular;
      if (spec.error_model != ErrorModel::Heteroscedastic) spec.error_model = ErrorModel::StudentT;
      break;
    case Scenario::E:
      spec.covariate_design = CovariateDesign::TimeVarying;
      spec.time_design = TimeDesign::Irregular;
      spec.error_model = ErrorModel::Gauss;
      break;
    case Scenario::F:
      spec.covariate_design = CovariateDesign::Baseline;
      spec.time_design = TimeDesign::Irregular;
      spec.error_model = ErrorModel::Gauss;
      spec.amplitude = 0.5;
      break;
  }
  return spec;
}

ScenarioSpec make_scenario(Scenario scenario, int N, int n_i, int p) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.N = N;
  spec.n_i = n_i;
  spec.p = p;
  spec.q = default_basis_size(N, n_i, p);
  spec.nu = 3.0;
  return apply_scenario_constraints(spec);
}

void validate(const ScenarioSpec& spec) {
  if (spec.N < 1 || spec.n_i < 1 || spec.p < 1)
    throw ConfigError(fmt::format("N, n_i and p must be positive (got {}, {}, {})", spec.N, spec.n_i, spec.p));
  if (spec.time_design == TimeDesign::Regular && spec.n_i < 2)
    throw ConfigError("a regular time grid needs n_i >= 2");
  if (spec.s_v < 0 || spec.s_c < 0) throw ConfigError("s_v and s_c must be non-negative");
  if (spec.s_v > kNumTemplates)
    throw ConfigError(fmt::format("s_v = {} exceeds the {} template functions", spec.s_v, kNumTemplates));
  if (spec.s_v + spec.s_c > spec.p)
    throw ConfigError(fmt::format("s_v + s_c = {} exceeds p = {}", spec.s_v + spec.s_c, spec.p));
  if (!(spec.sigma >= 0)) throw ConfigError("sigma must be non-negative");
  if (!(std::abs(spec.rho) < 1)) throw ConfigError("rho must lie in (-1, 1)");
  if (!(std::abs(spec.alpha) < 1)) throw ConfigError("alpha must lie in (-1, 1)");
  if (!(spec.sigma_x2 >= 0)) throw ConfigError("sigma_x2 must be non-negative");
  if (spec.error_model == ErrorModel::StudentT && !(spec.nu > 2))
    throw ConfigError("Student-t errors need nu > 2 for a finite variance");
  if (spec.q < 4) throw ConfigError("cubic splines need q >= 4");
  if (spec.n_test_subjects < 1) throw ConfigError("test set needs at least one subject");
  if (spec.scenario == Scenario::B && spec.rho != 0.6) throw ConfigError("scenario B requires rho = 0.6");
  if (spec.scenario == Scenario::F && spec.amplitude != 0.5)
    throw ConfigError("scenario F requires amplitude 0.5");
}

// ---------------------------------------------------------------------------
// Truth

double template_value(int index, double t) {
  switch (index) {
    case 1: return std::sin(2 * kPi * t);
    case 2: return std::cos(2 * kPi * t);
    case 3: return std::sin(4 * kPi * t);
    case 4: return std::cos(4 * kPi * t);
    case 5: return 16 * t * t * (1 - t) * (1 - t);
    case 6: return std::sin(kPi * t);
  }
  throw ConfigError(fmt::format("template index {} out of range", index));
}

double template_second_derivative(int index, double t) {
  switch (index) {
    case 1: return -4 * kPi * kPi * std::sin(2 * kPi * t);
    case 2: return -4 * kPi * kPi * std::cos(2 * kPi * t);
    case 3: return -16 * kPi * kPi * std::sin(4 * kPi * t);
    case 4: return -16 * kPi * kPi * std::cos(4 * kPi * t);
    case 5: return 16 * (2 - 12 * t + 12 * t * t);
    case 6: return -kPi * kPi * std::sin(kPi * t);
  }
  throw ConfigError(fmt::format("template index {} out of range", index));
}

double template_mean(int index) {
  switch (index) {
    case 1:
    case 2:
    case 3:
    case 4: return 0.0;
    case 5: return 8.0 / 15.0;
    case 6: return 2.0 / kPi;
  }
  throw ConfigError(fmt::format("template index {} out of range", index));
}

double TrueStructure::deviation(int k, double t) const {
  if (!varies(k)) return 0.0;
  const int idx = templates[k];
  return amplitude * (template_value(idx, t) - template_mean(idx));
}

double TrueStructure::deviation_second_derivative(int k, double t) const {
  if (!varies(k)) return 0.0;
  return amplitude * template_second_derivative(templates[k], t);
}

TrueStructure make_truth(const ScenarioSpec& spec) {
  validate(spec);
  TrueStructure truth;
  truth.amplitude = spec.amplitude;
  truth.mu0 = Eigen::VectorXd::Zero(spec.p);
  for (int k = 0; k < spec.s_v; ++k) truth.templates.push_back(k + 1);
  if (spec.scenario == Scenario::F && spec.s_v > 0 && spec.s_v < kNumTemplates)
    truth.templates.back() = 6;
  const int half = (spec.s_c + 1) / 2;
  for (int j = 0; j < spec.s_c; ++j) truth.mu0(spec.s_v + j) = j < half ? 1.0 : -1.0;
  for (int k = 0; k < spec.p; ++k) {
    if (k < spec.s_v)
      truth.partition.s_vary.push_back(k);
    else if (k < spec.s_v + spec.s_c)
      truth.partition.s_const.push_back(k);
    else
      truth.partition.s_zero.push_back(k);
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Data generation

LongitudinalDataset generate(const ScenarioSpec& spec, const TrueStructure& truth,
                             std::mt19937_64& rng, int num_subjects) {
  validate(spec);
  if (truth.num_covariates() != spec.p) throw DimensionError("truth and spec disagree on p");
  const int p = spec.p;
  const int m = spec.n_i;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> student(spec.nu);
  const Eigen::MatrixXd x_chol = ar1_cholesky(p, spec.rho);
  const Eigen::MatrixXd e_chol =
      spec.error_model == ErrorModel::AR1 ? ar1_cholesky(m, spec.alpha) : Eigen::MatrixXd();
  const double x_sd = std::sqrt(spec.sigma_x2);

  LongitudinalDataset data;
  for (int k = 0; k < p; ++k) data.covariate_names.push_back(fmt::format("x{}", k + 1));
  data.time_domain = {0.0, 1.0};
  data.subjects.reserve(num_subjects);
  const int width = std::max(4, static_cast<int>(std::to_string(num_subjects).size()));
  for (int i = 0; i < num_subjects; ++i) {
    SubjectRecord s;
    s.subject_id = fmt::format("s{:0{}}", i + 1, width);
    s.times.resize(m);
    if (spec.time_design == TimeDesign::Regular) {
      for (int j = 0; j < m; ++j) s.times[j] = m == 1 ? 0.0 : double(j) / double(m - 1);
    } else {
      for (int j = 0; j < m; ++j) s.times[j] = uniform(rng);
      std::sort(s.times.begin(), s.times.end());
    }

    Eigen::VectorXd z(p);
    for (int k = 0; k < p; ++k) z(k) = normal(rng);
    const Eigen::VectorXd baseline = x_chol * z;
    s.covariates.resize(m, p);
    for (int j = 0; j < m; ++j) {
      s.covariates.row(j) = baseline.transpose();
      if (spec.covariate_design == CovariateDesign::TimeVarying)
        for (int k = 0; k < p; ++k) s.covariates(j, k) += x_sd * normal(rng);
    }

    Eigen::VectorXd eps(m);
    switch (spec.error_model) {
      case ErrorModel::Gauss:
        for (int j = 0; j < m; ++j) eps(j) = spec.sigma * normal(rng);
        break;
      case ErrorModel::StudentT: {
        const double scale = spec.sigma * std::sqrt((spec.nu - 2) / spec.nu);
        for (int j = 0; j < m; ++j) eps(j) = scale * student(rng);
        break;
      }
      case ErrorModel::Heteroscedastic:
        for (int j = 0; j < m; ++j)
          eps(j) = spec.sigma * (1 + 0.5 * std::sin(2 * kPi * s.times[j])) * normal(rng);
        break;
      case ErrorModel::AR1: {
        Eigen::VectorXd w(m);
        for (int j = 0; j < m; ++j) w(j) = normal(rng);
        eps = spec.sigma * (e_chol * w);
        break;
      }
    }

    s.responses.resize(m);
    for (int j = 0; j < m; ++j) {
      double mean = 0;
      for (int k = 0; k < p; ++k) {
        const double beta = truth.mu0(k) + truth.deviation(k, s.times[j]);
        if (beta != 0) mean += s.covariates(j, k) * beta;
      }
      s.responses[j] = mean + eps(j);
    }
    data.subjects.push_back(std::move(s));
  }
  return data;
}

LongitudinalDataset generate(const ScenarioSpec& spec) {
  const auto truth = make_truth(spec);
  std::mt19937_64 rng(spec.seed);
  return generate(spec, truth, rng, spec.N);
}

// ---------------------------------------------------------------------------
// Metrics

ReplicationMetrics score_fit(const Fit& fit, const TrueStructure& truth, long n_train,
                             const Design& test_design, const Standardization* standardization) {
  const int p = truth.num_covariates();
  if (fit.num_covariates() != p) throw DimensionError("fit and truth disagree on p");
  const auto& basis = *fit.basis;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
  if (standardization)
    for (int k = 0; k < p; ++k) scale(k) = standardization->scale.at(k);

  ReplicationMetrics m;
  // ISE on G equally spaced points.
  double ise = 0;
  for (int g = 0; g < kIseGridSize; ++g) {
    const double t = double(g) / double(kIseGridSize - 1);
    const Eigen::VectorXd centered = basis.eval_centered(t);
    for (int k = 0; k < p; ++k) {
      const double est = (fit.mu(k) + centered.dot(fit.theta[k])) / scale(k);
      const double diff = est - truth.coefficient(k, t);
      ise += diff * diff;
    }
  }
  m.ise = ise / (double(kIseGridSize) * p);

  const Eigen::VectorXd mu_orig = fit.mu.cwiseQuotient(scale);
  m.mse_mu = (mu_orig - truth.mu0).squaredNorm() / p;
  const auto& s_const = truth.partition.s_const;
  if (s_const.empty()) {
    m.mse_mu_act = nan();
  } else {
    double acc = 0;
    for (int k : s_const) acc += (mu_orig(k) - truth.mu0(k)) * (mu_orig(k) - truth.mu0(k));
    m.mse_mu_act = acc / double(s_const.size());
  }

  // Roughness error: 250 cells x 4 Gauss nodes = 1000 points.
  const auto& s_vary = truth.partition.s_vary;
  if (s_vary.empty()) {
    m.re = nan();
  } else {
    double acc = 0;
    for (int k : s_vary) {
      acc += integrate_composite<double>(
          [&](double t) {
            const double d = basis.eval_derivative(t, 2).dot(fit.theta[k]) / scale(k) -
                             truth.deviation_second_derivative(k, t);
            return d * d;
          },
          0.0, 1.0, 250, 4);
    }
    m.re = acc / double(s_vary.size());
  }

  m.selected = select_vary(fit);
  const std::set<int> truth_vary(s_vary.begin(), s_vary.end());
  int tp = 0, fp = 0;
  for (int k : m.selected) (truth_vary.count(k) ? tp : fp) += 1;
  m.tpr_vary = s_vary.empty() ? nan() : double(tp) / double(s_vary.size());
  const int negatives = p - static_cast<int>(s_vary.size());
  m.fpr_vary = negatives == 0 ? 0.0 : double(fp) / double(negatives);

  const auto est = classify(fit, n_train, p).labels();
  const auto ref = truth.partition.labels();
  int correct = 0;
  for (int k = 0; k < p; ++k) correct += est[k] == ref[k];
  m.class_acc = double(correct) / p;

  m.mspe = (test_design.y - fitted_values(test_design, fit)).squaredNorm() /
           static_cast<double>(test_design.rows());
  return m;
}

double stability(const std::vector<std::vector<int>>& selected_sets) {
  const std::size_t R = selected_sets.size();
  if (R < 2) throw ConfigError("stability needs at least two replications");
  double total = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const std::set<int> a(selected_sets[r].begin(), selected_sets[r].end());
    for (std::size_t s = r + 1; s < R; ++s) {
      const std::set<int> b(selected_sets[s].begin(), selected_sets[s].end());
      if (a.empty() && b.empty()) {
        total += 1;
        continue;
      }
      std::size_t inter = 0;
      for (int k : a) inter += b.count(k);
      const std::size_t uni = a.size() + b.size() - inter;
      total += double(inter) / double(uni);
    }
  }
  return 2 * total / (double(R) * double(R - 1));
}

// ---------------------------------------------------------------------------
// Study driver

std::uint64_t replication_seed(std::uint64_t seed, int scenario_index, int replication) {
  return splitmix64(splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(scenario_index)) +
                    static_cast<std::uint64_t>(replication));
}

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::vector<ReplicationMetrics> per_method;
  std::vector<CurveGrid> curves;
};

ReplicationOutcome run_replication(const ScenarioSpec& spec, int scenario_index, int r,
                                   const std::vector<Method>& methods, std::uint64_t seed,
                                   const StudyOptions& options) {
  ReplicationOutcome out;
  const auto truth = make_truth(spec);
  std::mt19937_64 rng(replication_seed(seed, scenario_index, r));
  auto train = generate(spec, truth, rng, spec.N);
  auto test = generate(spec, truth, rng, spec.n_test_subjects);
  train = standardize(std::move(train));
  const Standardization& stdz = *train.preprocessing.standardization;
  test = apply_standardization(std::move(test), stdz);

  SplineConfig config;
  config.degree = 3;
  config.num_internal_knots = spec.q - 4;
  auto basis = std::make_shared<const Basis>(build_basis<double>(config));
  const Design design = build_design(train, *basis);
  const Design test_design = build_design(test, *basis);
  const long n_train = static_cast<long>(design.rows());

  TuningGrid grid = default_grid(lambda1_max(design));
  grid.gamma = options.gamma;
  for (Method method : methods) {
    const auto tuned = tune_ebic(design, basis, grid, options.solver, method);
    out.per_method.push_back(score_fit(tuned.best_fit, truth, n_train, test_design, &stdz));
    if (options.keep_curves) {
      CurveGrid c;
      c.scenario = to_string(spec.scenario);
      c.replication = r;
      c.method = method;
      c.t.resize(kIseGridSize);
      c.beta_hat.resize(kIseGridSize, spec.p);
      c.beta_true.resize(kIseGridSize, spec.p);
      for (int g = 0; g < kIseGridSize; ++g) {
        const double t = double(g) / double(kIseGridSize - 1);
        c.t(g) = t;
        for (int k = 0; k < spec.p; ++k) {
          c.beta_hat(g, k) = tuned.best_fit.coefficient(k, t) / stdz.scale[k];
          c.beta_true(g, k) = truth.coefficient(k, t);
        }
      }
      out.curves.push_back(std::move(c));
    }
  }
  out.ok = true;
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  double sum = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++s.count;
    }
  if (s.count == 0) {
    s.mean = nan();
    return s;
  }
  s.mean = sum / s.count;
  if (s.count >= 2) {
    double ss = 0;
    for (double v : values)
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (s.count - 1) / s.count);
  }
  return s;
}

}  // namespace

StudyResult run_study(const std::vector<ScenarioSpec>& specs, const std::vector<Method>& methods,
                      int R, std::uint64_t seed, const StudyOptions& options) {
  if (R < 1) throw ConfigError("replication count must be at least 1");
  if (methods.empty()) throw ConfigError("no methods requested");
  for (const auto& spec : specs) validate(spec);

  StudyResult result;
  for (std::size_t si = 0; si < specs.size(); ++si) {
    const auto& spec = specs[si];
    std::vector<ReplicationOutcome> outcomes(R);
    std::atomic<int> next{0};
    const auto worker = [&]() {
      for (int r = next++; r < R; r = next++) {
        try {
          outcomes[r] = run_replication(spec, static_cast<int>(si), r, methods, seed, options);
        } catch (const Error&) {
          outcomes[r].ok = false;
        }
      }
    };
    const int threads = std::clamp(options.parallelism, 1, R);
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    int failed = 0;
    for (const auto& o : outcomes) failed += !o.ok;
    result.replications_attempted += R;
    result.replications_failed += failed;
    if (failed * 10 > R)
      throw StudyError(fmt::format("{} of {} replications failed for scenario {} {}", failed, R,
                                   to_string(spec.scenario), config_label(spec)));

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::map<std::string, std::vector<double>> columns;
      std::vector<std::vector<int>> selections;
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        const auto& m = o.per_method[mi];
        columns["ISE"].push_back(m.ise);
        columns["MSE_mu"].push_back(m.mse_mu);
        columns["MSE_mu_act"].push_back(m.mse_mu_act);
        columns["RE"].push_back(m.re);
        columns["TPR_vary"].push_back(m.tpr_vary);
        columns["FPR_vary"].push_back(m.fpr_vary);
        columns["ClassAcc"].push_back(m.class_acc);
        columns["MSPE"].push_back(m.mspe);
        selections.push_back(m.selected);
      }
      MetricsReport report;
      report.scenario = to_string(spec.scenario);
      report.config = config_label(spec);
      report.method = methods[mi];
      for (const auto& [name, values] : columns) report.metrics[name] = summarize(values);
      if (selections.size() >= 2) {
        report.metrics["Stab"] = MetricSummary{stability(selections), std::nullopt, 1};
      }
      result.table.push_back(std::move(report));
    }
    if (options.keep_curves)
      for (auto& o : outcomes)
        for (auto& c : o.curves) result.curves.push_back(std::move(c));
  }
  return result;
}

namespace {

const std::vector<std::string>& metric_order() {
  static const std::vector<std::string> order = {"MSE_mu", "MSE_mu_act", "MSPE",    "RE",  "ISE",
                                                 "TPR_vary", "FPR_vary", "ClassAcc", "Stab"};
  return order;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const StudyResult& result) {
  out << "scenario,config,method,metric,mean,se\n";
  for (const auto& row : result.table)
    for (const auto& name : metric_order()) {
      const auto it = row.metrics.find(name);
      if (it == row.metrics.end()) continue;
      const auto& s = it->second;
      fmt::print(out, "{},{},{},{},{:.17g},{}\n", row.scenario, row.config, to_string(row.method),
                 name, s.mean, s.se ? fmt::format("{:.17g}", *s.se) : std::string{});
    }
}

void write_curve_csv(std::ostream& out, const CurveGrid& curve) {
  out << "k,t,beta_hat,beta_true\n";
  for (Eigen::Index k = 0; k < curve.beta_hat.cols(); ++k)
    for (Eigen::Index g = 0; g < curve.t.size(); ++g)
      fmt::print(out, "{},{:.17g},{:.17g},{:.17g}\n", k + 1, curve.t(g), curve.beta_hat(g, k),
                 curve.beta_true(g, k));
}

void print_summary(std::ostream& out, const StudyResult& result) {
  fmt::print(out, "{:<4} {:<16} {:<13}", "Scn", "Config", "Method");
  for (const auto& name : metric_order()) fmt::print(out, " {:>11}", name);
  out << '\n';
  for (const auto& row : result.table) {
    fmt::print(out, "{:<4} {:<16} {:<13}", row.scenario, row.config, to_string(row.method));
    for (const auto& name : metric_order()) {
      const auto it = row.metrics.find(name);
      if (it == row.metrics.end())
        fmt::print(out, " {:>11}", "-");
      else
        fmt::print(out, " {:>11.4f}", it->second.mean);
    }
    out << '\n';
  }
  if (result.replications_failed > 0)
    fmt::print(out, "{} of {} replications failed\n", result.replications_failed,
               result.replications_attempted);
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(Scenario s) { return std::string(1, static_cast<char>('A' + static_cast<int>(s))); }

Scenario scenario_from_string(const std::string& s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') return static_cast<Scenario>(s[0] - 'A');
  if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'f') return static_cast<Scenario>(s[0] - 'a');
  throw ConfigError(fmt::format("unknown scenario '{}' (expected A-F)", s));
}

std::string to_string(ErrorModel e) {
  switch (e) {
    case ErrorModel::Gauss: return "gauss";
    case ErrorModel::StudentT: return "student_t";
    case ErrorModel::Heteroscedastic: return "heteroscedastic";
    case ErrorModel::AR1: return "ar1";
  }
  return "unknown";
}

ErrorModel error_model_from_string(const std::string& s) {
  if (s == "gauss") return ErrorModel::Gauss;
  if (s == "student_t") return ErrorModel::StudentT;
  if (s == "heteroscedastic") return ErrorModel::Heteroscedastic;
  if (s == "ar1") return ErrorModel::AR1;
  throw ConfigError(fmt::format("unknown error model '{}'", s));
}

std::string to_string(TimeDesign d) { return d == TimeDesign::Regular ? "regular" : "irregular"; }

TimeDesign time_design_from_string(const std::string& s) {
  if (s == "regular") return TimeDesign::Regular;
  if (s == "irregular") return TimeDesign::Irregular;
  throw ConfigError(fmt::format("unknown time design '{}'", s));
}

std::string to_string(CovariateDesign d) {
  return d == CovariateDesign::Baseline ? "baseline" : "time_varying";
}

CovariateDesign covariate_design_from_string(const std::string& s) {
  if (s == "baseline") return CovariateDesign::Baseline;
  if (s == "time_varying") return CovariateDesign::TimeVarying;
  throw ConfigError(fmt::format("unknown covariate design '{}'", s));
}

std::string config_label(const ScenarioSpec& spec) {
  return fmt::format("N{}_n{}_p{}", spec.N, spec.n_i, spec.p);
}

}  // namespace tvselect
