#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvselect/dataset.hpp"
#include "tvselect/structure.hpp"
#include "tvselect/tuning.hpp"

namespace tvselect {

enum class Scenario { A, B, C, D, E, F };
enum class ErrorModel { Gauss, StudentT, Heteroscedastic, AR1 };
enum class TimeDesign { Regular, Irregular };
enum class CovariateDesign { Baseline, TimeVarying };

struct ScenarioSpec {
  Scenario scenario = Scenario::A;
  int N = 100;
  int n_i = 5;
  int p = 100;
  double rho = 0.3;
  double alpha = 0.3;
  double sigma = 1.0;
  double sigma_x2 = 0.1;
  double amplitude = 1.0;
  ErrorModel error_model = ErrorModel::Gauss;
  double nu = 3.0;
  TimeDesign time_design = TimeDesign::Irregular;
  CovariateDesign covariate_design = CovariateDesign::Baseline;
  int s_v = 6;
  int s_c = 6;
  int q = 8;
  int n_test_subjects = 500;
  std::uint64_t seed = 0;
};

/// Spec with the scenario's designs and forced values applied: B sets
/// rho = 0.6, C uses a regular grid with AR(1) errors, D uses t_3 errors,
/// E time-varying covariates, F amplitude 0.5 with the sin(pi t) template.
ScenarioSpec make_scenario(Scenario scenario, int N, int n_i, int p);

/// Re-applies the scenario's forced values to an edited spec.
ScenarioSpec apply_scenario_constraints(ScenarioSpec spec);

void validate(const ScenarioSpec& spec);

/// q by sample size: 8 for (100,5,.) and (200,5,.), 10 for (200,8,200), 12 beyond.
int default_basis_size(int N, int n_i, int p);

/// Template deviations g~_1..g~_6 (1-based) with their [0,1] means and
/// analytic second derivatives.
double template_value(int index, double t);
double template_second_derivative(int index, double t);
double template_mean(int index);

struct TrueStructure {
  Eigen::VectorXd mu0;
  /// Template index (1..6) for each varying covariate k < s_v.
  std::vector<int> templates;
  double amplitude = 1.0;
  StructuralPartition partition;

  int num_covariates() const { return static_cast<int>(mu0.size()); }
  bool varies(int k) const { return k < static_cast<int>(templates.size()); }
  /// a {g~(t) - int g~}.
  double deviation(int k, double t) const;
  double deviation_second_derivative(int k, double t) const;
  double coefficient(int k, double t) const { return mu0(k) + deviation(k, t); }
};

/// S_vary = {0..s_v-1}, S_const = {s_v..s_v+s_c-1} with mu0 = +1 on the first
/// half and -1 on the second, the rest zero.
TrueStructure make_truth(const ScenarioSpec& spec);

/// Draws `num_subjects` subjects from the scenario's data-generating process.
/// Times are on [0,1]; covariates are returned unstandardized.
LongitudinalDataset generate(const ScenarioSpec& spec, const TrueStructure& truth,
                             std::mt19937_64& rng, int num_subjects);

/// Training data from spec.seed.
LongitudinalDataset generate(const ScenarioSpec& spec);

struct ReplicationMetrics {
  double ise = 0;
  double mse_mu = 0;
  double mse_mu_act = 0;  // NaN when s_c = 0
  double re = 0;          // NaN when s_v = 0
  double tpr_vary = 0;    // NaN when s_v = 0
  double fpr_vary = 0;
  double class_acc = 0;
  double mspe = 0;
  std::vector<int> selected;
};

inline constexpr int kIseGridSize = 200;

/**
 * Scores one fit against the truth. `standardization` maps the original
 * covariates to the fit's scale: curve metrics compare beta_k/scale_k with the
 * truth on the original scale, classification uses the fit as is with
 * tau = sqrt(log p / n). MSPE is computed on `test_design`, which must be on
 * the fit's covariate scale.
 */
ReplicationMetrics score_fit(const Fit& fit, const TrueStructure& truth, long n_train,
                             const Design& test_design, const Standardization* standardization);

/// Average pairwise Jaccard index; two empty sets count as 1.
double stability(const std::vector<std::vector<int>>& selected_sets);

struct MetricSummary {
  double mean = 0;
  std::optional<double> se;
  int count = 0;
};

struct MetricsReport {
  std::string scenario;
  std::string config;
  Method method = Method::TVSelect;
  std::map<std::string, MetricSummary> metrics;
};

struct CurveGrid {
  std::string scenario;
  int replication = 0;
  Method method = Method::TVSelect;
  Eigen::VectorXd t;
  Eigen::MatrixXd beta_hat;   // G x p, original covariate scale
  Eigen::MatrixXd beta_true;  // G x p
};

struct StudyOptions {
  int parallelism = 1;
  bool keep_curves = false;
  SolverOptions solver;
  double gamma = 0.5;
};

struct StudyResult {
  std::vector<MetricsReport> table;
  std::vector<CurveGrid> curves;
  int replications_attempted = 0;
  int replications_failed = 0;
};

/// Child seed for replication r of scenario s; independent of R.
std::uint64_t replication_seed(std::uint64_t seed, int scenario_index, int replication);

/**
 * For every spec and replication: generate training and test data once, fit
 * every method on the same data with EBIC tuning, score, and aggregate mean
 * and Monte Carlo standard error. Failed replications are skipped; more than
 * 10% failures per spec raises StudyError.
 */
StudyResult run_study(const std::vector<ScenarioSpec>& specs, const std::vector<Method>& methods,
                      int R, std::uint64_t seed, const StudyOptions& options = {});

/// scenario,config,method,metric,mean,se
void write_metrics_csv(std::ostream& out, const StudyResult& result);
/// k,t,beta_hat,beta_true (k is 1-based)
void write_curve_csv(std::ostream& out, const CurveGrid& curve);
void print_summary(std::ostream& out, const StudyResult& result);

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);
std::string to_string(ErrorModel e);
ErrorModel error_model_from_string(const std::string& s);
std::string to_string(TimeDesign d);
TimeDesign time_design_from_string(const std::string& s);
std::string to_string(CovariateDesign d);
CovariateDesign covariate_design_from_string(const std::string& s);
std::string config_label(const ScenarioSpec& spec);

}  // namespace tvselect
