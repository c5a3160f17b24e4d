#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "tvselect/artifact.hpp"
#include "tvselect/errors.hpp"
#include "tvselect/simulate.hpp"
#include "tvselect/structure.hpp"
#include "tvselect/tuning.hpp"

namespace tvselect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCurvePoints = 200;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelArgs {
  std::string data;
  std::string out;
  std::string method = "tvselect";
  int degree = 3;
  int knots = 4;
  std::string knot_placement = "equally_spaced";
  bool standardize = true;
  bool demean = false;
  double tol = 1e-6;
  int max_iter = 500;
  std::string block_update = "exact";
  double threshold_c = 1.0;
};

struct FitArgs : ModelArgs {
  double lambda1 = 0;
  double lambda2 = 0;
};

struct TuneArgs : ModelArgs {
  std::string criterion = "ebic";
  int folds = 5;
  std::uint64_t seed = 0;
  double gamma = 0.5;
  int n_lambda1 = 20;
  int n_lambda2 = 5;
};

struct ArtifactArgs {
  std::string artifact;
  std::string data;
  std::string out;
  double threshold_c = 1.0;
};

struct SimulateArgs {
  std::string scenario = "A";
  int N = 100;
  int n_i = 5;
  int p = 100;
  int reps = 2;
  std::uint64_t seed = 0;
  int s_v = 6;
  int s_c = 6;
  int q = 0;
  double sigma = 1.0;
  double rho = 0.3;
  double alpha = 0.3;
  double nu = 3.0;
  double sigma_x2 = 0.1;
  double amplitude = 1.0;
  std::string error = "gauss";
  int n_test = 500;
  std::string methods = "tvselect,vcridge,grouplasso,screenrefit";
  bool curves = false;
  double gamma = 0.5;
  double tol = 1e-6;
  int max_iter = 500;
  std::string out;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string slug(Method m) {
  std::string s;
  for (char c : to_string(m))
    if (std::isalnum(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(c));
  return s;
}

void add_model_options(CLI::App* sub, ModelArgs& a) {
  sub->add_option("--data", a.data, "Long-format CSV with subject,time,y and covariate columns");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--method", a.method, "tvselect, vcridge, grouplasso or screenrefit");
  sub->add_option("--degree", a.degree, "Spline degree");
  sub->add_option("--knots", a.knots, "Number of interior knots");
  sub->add_option("--knot-placement", a.knot_placement, "equally_spaced or time_quantiles");
  sub->add_option("--standardize", a.standardize, "Standardize covariates (pooled)");
  sub->add_option("--demean", a.demean, "De-mean response and covariates within subject");
  sub->add_option("--tol", a.tol, "Relative objective tolerance");
  sub->add_option("--max-iter", a.max_iter, "Maximum number of sweeps");
  sub->add_option("--block-update", a.block_update, "exact or smooth_select");
  sub->add_option("--threshold-c", a.threshold_c, "Multiplier of the const/zero threshold");
}

void add_config_option(CLI::App* sub) {
  sub->add_option("--config", "JSON config file; its values override command-line flags");
}

std::vector<std::string> config_values(const json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_boolean()) return {v.get<bool>() ? "true" : "false"};
  if (v.is_number()) return {v.dump()};
  throw UsageError(fmt::format("config values must be strings, numbers or booleans, got {}", v.dump()));
}

// Values from --config replace command-line values, with a warning on conflict.
void merge_config(CLI::App* sub, std::ostream& err) {
  auto* cfg = sub->get_option("--config");
  if (cfg->count() == 0) return;
  const auto path = cfg->as<std::string>();
  if (!fs::exists(path)) throw UsageError(fmt::format("config file '{}' does not exist", path));
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) throw UsageError(fmt::format("config file '{}' must hold a JSON object", path));
  for (const auto& [key, value] : j.items()) {
    if (key == "command") {
      if (value != sub->get_name())
        fmt::print(err, "warning: config file '{}' was written for '{}'\n", path, value.dump());
      continue;
    }
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw UsageError(fmt::format("config file '{}': unknown option '{}'", path, key));
    const auto values = config_values(value);
    if (opt->count() > 0 && opt->results() != values)
      fmt::print(err, "warning: --{} from '{}' overrides the command line\n", key, path);
    opt->clear();
    for (const auto& v : values) opt->add_result(v);
    opt->run_callback();
  }
}

json echo_options(const CLI::App* sub) {
  json j;
  j["command"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name == "threads") continue;
    if (opt->count() > 0)
      j[name] = opt->results().front();
    else
      j[name] = opt->get_default_str();
  }
  return j;
}

void require(const CLI::App* sub, const std::string& name) {
  if (sub->get_option("--" + name)->count() == 0)
    throw UsageError(fmt::format("{}: --{} is required", sub->get_name(), name));
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw UsageError(fmt::format("input file '{}' does not exist", path));
}

fs::path output_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw UsageError(fmt::format("cannot create output directory '{}'", out));
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError(fmt::format("cannot write '{}'", path.string()));
  return f;
}

void write_echo(const fs::path& dir, const json& echo) { open_output(dir / "config.json") << echo.dump(2) << '\n'; }

LongitudinalDataset read_data(const std::string& path, bool require_response) {
  require_file(path);
  try {
    return read_long_csv(path, CsvReadOptions{require_response});
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()), e.row(), e.column());
  }
}

SolverOptions solver_options(const ModelArgs& a) {
  SolverOptions o;
  o.tol = a.tol;
  o.max_iter = a.max_iter;
  if (a.block_update == "exact")
    o.block_update = BlockUpdate::Exact;
  else if (a.block_update == "smooth_select")
    o.block_update = BlockUpdate::SmoothSelect;
  else
    throw ConfigError(fmt::format("unknown block update '{}'", a.block_update));
  validate(o);
  return o;
}

struct Prepared {
  LongitudinalDataset data;
  std::shared_ptr<const Basis> basis;
  Design design;
};

Prepared prepare(const ModelArgs& a) {
  Prepared p;
  p.data = rescale_times(read_data(a.data, true));
  if (a.standardize) p.data = standardize(std::move(p.data));
  if (a.demean) p.data = demean_within_subject(std::move(p.data));
  const SplineConfig config{a.degree, a.knots, knot_placement_from_string(a.knot_placement)};
  const auto times = p.data.all_times();
  p.basis = std::make_shared<const Basis>(build_basis<double>(config, std::span<const double>(times)));
  p.design = build_design(p.data, *p.basis);
  return p;
}

double covariate_scale(const FitArtifact& a, int k) {
  return a.preprocessing.standardization ? a.preprocessing.standardization->scale[k] : 1.0;
}

void write_partition(const fs::path& path, const FitArtifact& a, const StructuralPartition& part) {
  auto f = open_output(path);
  f << "k,name,class,mu,theta_norm,tau\n";
  const auto labels = part.labels();
  for (int k = 0; k < a.fit.num_covariates(); ++k)
    fmt::print(f, "{},{},{},{},{},{}\n", k + 1, a.covariate_names[k], to_string(labels[k]),
               num(a.fit.mu(k)), num(a.fit.theta[k].norm()), num(part.threshold_used));
}

// beta_k(t) on the original covariate scale, t on the rescaled [0,1] axis.
void write_curves(const fs::path& path, const FitArtifact& a) {
  auto f = open_output(path);
  f << "k,t,beta_hat\n";
  for (int k = 0; k < a.fit.num_covariates(); ++k) {
    const double scale = covariate_scale(a, k);
    for (int g = 0; g < kCurvePoints; ++g) {
      const double t = double(g) / double(kCurvePoints - 1);
      fmt::print(f, "{},{},{}\n", k + 1, num(t), num(a.fit.coefficient(k, t) / scale));
    }
  }
}

void write_fit_outputs(const fs::path& dir, const FitArtifact& a, std::ostream& out) {
  save_artifact(dir / "fit.json", a);
  write_partition(dir / "partition.csv", a, a.partition);
  write_curves(dir / "curves.csv", a);
  const auto& f = a.fit;
  fmt::print(out, "method {}  lambda1 {}  lambda2 {}\n", to_string(f.method), num(f.penalty.lambda1),
             num(f.penalty.lambda2));
  fmt::print(out, "converged {}  iterations {}  objective {}\n", f.converged ? "yes" : "no",
             f.iterations, f.objective_trace.empty() ? std::string("-") : num(f.objective_trace.back()));
  fmt::print(out, "vary {}  const {}  zero {}  (tau {})\n", a.partition.s_vary.size(),
             a.partition.s_const.size(), a.partition.s_zero.size(), num(a.partition.threshold_used));
}

int cmd_fit(CLI::App* sub, const FitArgs& a, std::ostream& out) {
  for (const char* name : {"data", "out", "lambda1", "lambda2"}) require(sub, name);
  const PenaltyConfig penalty{a.lambda1, a.lambda2};
  validate(penalty);
  const auto options = solver_options(a);
  const auto dir = output_dir(a.out);
  auto prep = prepare(a);
  const auto fit =
      fit_baseline(prep.design, prep.basis, method_from_string(a.method), penalty, options);
  const auto artifact = make_artifact(fit, prep.data, a.threshold_c);
  write_fit_outputs(dir, artifact, out);
  write_echo(dir, echo_options(sub));
  return kOk;
}

int cmd_tune(CLI::App* sub, const TuneArgs& a, std::ostream& out) {
  for (const char* name : {"data", "out"}) require(sub, name);
  const auto options = solver_options(a);
  const auto dir = output_dir(a.out);
  const Method method = method_from_string(a.method);
  auto prep = prepare(a);
  TuningGrid grid = default_grid(lambda1_max(prep.design), a.n_lambda1, a.n_lambda2);
  grid.gamma = a.gamma;
  TuningResult result;
  if (a.criterion == "ebic")
    result = tune_ebic(prep.design, prep.basis, grid, options, method);
  else if (a.criterion == "cv")
    result = tune_cv(prep.data, prep.basis, grid, a.folds, a.seed, options, method);
  else
    throw ConfigError(fmt::format("unknown criterion '{}' (expected ebic or cv)", a.criterion));
  auto surface = open_output(dir / "surface.csv");
  write_surface_csv(surface, result);
  const auto artifact = make_artifact(result.best_fit, prep.data, a.threshold_c);
  write_fit_outputs(dir, artifact, out);
  fmt::print(out, "best lambda1 {}  lambda2 {}\n", num(result.best_lambda1), num(result.best_lambda2));
  write_echo(dir, echo_options(sub));
  return kOk;
}

int cmd_predict(CLI::App* sub, const ArtifactArgs& a, std::ostream& out, std::ostream& err) {
  for (const char* name : {"artifact", "data", "out"}) require(sub, name);
  require_file(a.artifact);
  const auto artifact = load_artifact(a.artifact);
  const auto raw = read_data(a.data, false);
  check_compatible(artifact, raw);
  const auto data = prepare_for_artifact(raw, artifact);
  const auto dir = output_dir(a.out);
  auto f = open_output(dir / "predictions.csv");
  f << "subject,time,prediction,error\n";
  int rows = 0, failed = 0;
  for (int i = 0; i < data.num_subjects(); ++i) {
    const auto& s = data.subjects[i];
    for (int j = 0; j < s.size(); ++j, ++rows) {
      const double t = s.times[j];
      const double t_raw = raw.subjects[i].times[j];
      if (!(t >= 0 && t <= 1)) {
        ++failed;
        fmt::print(f, "{},{},,time outside the fitted range [{}; {}]\n", s.subject_id, num(t_raw),
                   num(artifact.time_domain.min), num(artifact.time_domain.max));
        continue;
      }
      const Eigen::VectorXd x = s.covariates.row(j).transpose();
      fmt::print(f, "{},{},{},\n", s.subject_id, num(t_raw), num(predict(artifact.fit, x, t)));
    }
  }
  fmt::print(out, "{} rows predicted, {} rows with errors\n", rows - failed, failed);
  if (failed > 0) fmt::print(err, "warning: {} rows fall outside the fitted time range\n", failed);
  write_echo(dir, echo_options(sub));
  return kOk;
}

int cmd_classify(CLI::App* sub, const ArtifactArgs& a, std::ostream& out) {
  for (const char* name : {"artifact", "out"}) require(sub, name);
  require_file(a.artifact);
  const auto artifact = load_artifact(a.artifact);
  const auto part = classify(artifact.fit, artifact.num_observations, artifact.fit.num_covariates(),
                             a.threshold_c);
  const auto dir = output_dir(a.out);
  write_partition(dir / "partition.csv", artifact, part);
  fmt::print(out, "vary {}  const {}  zero {}  (tau {})\n", part.s_vary.size(), part.s_const.size(),
             part.s_zero.size(), num(part.threshold_used));
  write_echo(dir, echo_options(sub));
  return kOk;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(method_from_string(item));
  if (out.empty()) throw ConfigError("no methods requested");
  return out;
}

int cmd_simulate(CLI::App* sub, const SimulateArgs& a, int threads, std::ostream& out,
                 std::ostream& err) {
  require(sub, "out");
  const auto given = [&](const char* name) { return sub->get_option(std::string("--") + name)->count() > 0; };
  ScenarioSpec spec = make_scenario(scenario_from_string(a.scenario), a.N, a.n_i, a.p);
  spec.s_v = a.s_v;
  spec.s_c = a.s_c;
  if (a.q > 0) spec.q = a.q;
  spec.sigma = a.sigma;
  spec.alpha = a.alpha;
  spec.nu = a.nu;
  spec.sigma_x2 = a.sigma_x2;
  spec.n_test_subjects = a.n_test;
  if (given("rho")) spec.rho = a.rho;
  if (given("amplitude")) spec.amplitude = a.amplitude;
  if (given("error")) spec.error_model = error_model_from_string(a.error);
  spec = apply_scenario_constraints(spec);
  if (given("rho") && spec.rho != a.rho)
    fmt::print(err, "warning: scenario {} fixes rho = {}\n", a.scenario, spec.rho);
  if (given("amplitude") && spec.amplitude != a.amplitude)
    fmt::print(err, "warning: scenario {} fixes the amplitude at {}\n", a.scenario, spec.amplitude);
  if (given("error") && to_string(spec.error_model) != a.error)
    fmt::print(err, "warning: scenario {} uses {} errors\n", a.scenario, to_string(spec.error_model));
  validate(spec);

  StudyOptions options;
  options.parallelism = threads;
  options.keep_curves = a.curves;
  options.gamma = a.gamma;
  options.solver.tol = a.tol;
  options.solver.max_iter = a.max_iter;
  const auto methods = parse_methods(a.methods);
  const auto dir = output_dir(a.out);
  const auto result = run_study({spec}, methods, a.reps, a.seed, options);

  auto metrics = open_output(dir / "metrics.csv");
  write_metrics_csv(metrics, result);
  if (a.curves) {
    const auto curve_dir = output_dir((dir / "curves").string());
    for (const auto& c : result.curves) {
      auto f = open_output(curve_dir / fmt::format("{}_{}_{}_r{}.csv", c.scenario, config_label(spec),
                                                   slug(c.method), c.replication + 1));
      write_curve_csv(f, c);
    }
  }
  print_summary(out, result);

  json echo = echo_options(sub);
  echo["scenario"] = to_string(spec.scenario);
  echo["q"] = fmt::format("{}", spec.q);
  echo["rho"] = fmt::format("{}", spec.rho);
  echo["amplitude"] = fmt::format("{}", spec.amplitude);
  echo["error"] = to_string(spec.error_model);
  write_echo(dir, echo);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly penalized varying-coefficient regression with zero/const/vary selection"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit at fixed penalties");
  add_config_option(fit);
  add_model_options(fit, fit_args);
  fit->add_option("--lambda1", fit_args.lambda1, "Group penalty");
  fit->add_option("--lambda2", fit_args.lambda2, "Roughness penalty");

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "Select penalties by EBIC or subject-wise CV");
  add_config_option(tune);
  add_model_options(tune, tune_args);
  tune->add_option("--criterion", tune_args.criterion, "ebic or cv");
  tune->add_option("--folds", tune_args.folds, "Number of CV folds");
  tune->add_option("--seed", tune_args.seed, "Fold assignment seed");
  tune->add_option("--gamma", tune_args.gamma, "EBIC gamma");
  tune->add_option("--n-lambda1", tune_args.n_lambda1, "lambda1 grid size");
  tune->add_option("--n-lambda2", tune_args.n_lambda2, "lambda2 grid size");

  ArtifactArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Predict new rows from a fit artifact");
  add_config_option(predict_cmd);
  predict_cmd->add_option("--artifact", predict_args.artifact, "fit.json from fit or tune");
  predict_cmd->add_option("--data", predict_args.data, "Long-format CSV (y optional)");
  predict_cmd->add_option("--out", predict_args.out, "Output directory");

  ArtifactArgs classify_args;
  auto* classify_cmd = app.add_subcommand("classify", "Re-classify effects of a fit artifact");
  add_config_option(classify_cmd);
  classify_cmd->add_option("--artifact", classify_args.artifact, "fit.json from fit or tune");
  classify_cmd->add_option("--out", classify_args.out, "Output directory");
  classify_cmd->add_option("--threshold-c", classify_args.threshold_c, "Threshold multiplier");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  add_config_option(simulate);
  simulate->add_option("--scenario", sim.scenario, "A-F");
  simulate->add_option("--N", sim.N, "Training subjects");
  simulate->add_option("--n-i", sim.n_i, "Observations per subject");
  simulate->add_option("--p", sim.p, "Covariates");
  simulate->add_option("--reps", sim.reps, "Replications");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--s-v", sim.s_v, "Number of time-varying effects");
  simulate->add_option("--s-c", sim.s_c, "Number of constant effects");
  simulate->add_option("--q", sim.q, "Basis size (0 picks it from the sample size)");
  simulate->add_option("--sigma", sim.sigma, "Error standard deviation");
  simulate->add_option("--rho", sim.rho, "Covariate AR(1) correlation");
  simulate->add_option("--alpha", sim.alpha, "Error AR(1) correlation (scenario C)");
  simulate->add_option("--nu", sim.nu, "Student-t degrees of freedom (scenario D)");
  simulate->add_option("--sigma-x2", sim.sigma_x2, "Within-subject covariate variance (scenario E)");
  simulate->add_option("--amplitude", sim.amplitude, "Deviation amplitude");
  simulate->add_option("--error", sim.error, "gauss, student_t, heteroscedastic or ar1");
  simulate->add_option("--n-test", sim.n_test, "Test subjects for MSPE");
  simulate->add_option("--methods", sim.methods, "Comma-separated methods");
  simulate->add_option("--curves", sim.curves, "Write curve grids");
  simulate->add_option("--gamma", sim.gamma, "EBIC gamma");
  simulate->add_option("--tol", sim.tol, "Solver tolerance");
  simulate->add_option("--max-iter", sim.max_iter, "Solver sweep limit");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--threads", threads, "Worker threads for replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    merge_config(sub, err);
    if (sub == fit) return cmd_fit(sub, fit_args, out);
    if (sub == tune) return cmd_tune(sub, tune_args, out);
    if (sub == predict_cmd) return cmd_predict(sub, predict_args, out, err);
    if (sub == classify_cmd) return cmd_classify(sub, classify_args, out);
    return cmd_simulate(sub, sim, threads, out, err);
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsageError;
  } catch (const CLI::Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsageError;
  } catch (const ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsageError;
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsageError;
  } catch (const ArtifactMismatchError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kUsageError;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kNumericalFailure;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kNumericalFailure;
  }
}

}  // namespace tvselect::cli
