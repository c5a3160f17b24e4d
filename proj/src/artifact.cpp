#include "tvselect/artifact.hpp"

#include <fstream>

#include <fmt/format.h>

#include "tvselect/errors.hpp"

namespace tvselect {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ArtifactMismatchError(fmt::format("artifact is missing '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArtifactMismatchError(fmt::format("artifact field '{}': {}", key, e.what()));
  }
}

}  // namespace

FitArtifact make_artifact(const Fit& fit, const LongitudinalDataset& dataset,
                          double threshold_multiplier) {
  if (fit.num_covariates() != dataset.num_covariates())
    throw DimensionError(fmt::format("fit has {} covariates, data has {}", fit.num_covariates(),
                                     dataset.num_covariates()));
  FitArtifact a;
  a.fit = fit;
  a.covariate_names = dataset.covariate_names;
  a.time_domain = dataset.time_domain;
  a.preprocessing = dataset.preprocessing;
  a.num_observations = dataset.num_observations();
  a.partition = classify(fit, a.num_observations, fit.num_covariates(), threshold_multiplier);
  return a;
}

json to_json(const FitArtifact& a) {
  const Fit& f = a.fit;
  const auto& basis = *f.basis;
  json j;
  j["format_version"] = kFormatVersion;
  j["method"] = to_string(f.method);
  j["penalty"] = {{"lambda1", f.penalty.lambda1},
                  {"lambda2", f.penalty.lambda2},
                  {"epsilon_prox", f.penalty.epsilon_prox}};
  j["basis"] = {{"degree", basis.degree()},
                {"num_internal_knots", basis.config().num_internal_knots},
                {"knot_placement", to_string(basis.config().placement)},
                {"interior_knots", vec(basis.interior_knots())}};
  j["n"] = a.num_observations;
  j["p"] = f.num_covariates();
  j["covariate_names"] = a.covariate_names;
  j["intercept"] = f.intercept;
  j["beta0"] = f.beta0;
  j["mu"] = vec(f.mu);
  json theta = json::array();
  for (const auto& th : f.theta) theta.push_back(vec(th));
  j["theta"] = std::move(theta);
  j["objective_trace"] = f.objective_trace;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;

  const auto& pre = a.preprocessing;
  json prep;
  prep["time_domain"] = {{"min", a.time_domain.min}, {"max", a.time_domain.max}};
  prep["demeaned"] = pre.demeaned;
  if (pre.demeaned) {
    prep["subject_means_y"] = pre.subject_means_y;
    json rows = json::array();
    for (Eigen::Index i = 0; i < pre.subject_means_x.rows(); ++i)
      rows.push_back(vec(Eigen::VectorXd(pre.subject_means_x.row(i).transpose())));
    prep["subject_means_x"] = std::move(rows);
  }
  if (pre.standardization) {
    prep["standardization"] = {{"center", pre.standardization->center},
                               {"scale", pre.standardization->scale},
                               {"exempt", pre.standardization->exempt}};
  } else {
    prep["standardization"] = nullptr;
  }
  j["preprocessing"] = std::move(prep);

  j["partition"] = {{"vary", a.partition.s_vary},
                    {"const", a.partition.s_const},
                    {"zero", a.partition.s_zero},
                    {"threshold", a.partition.threshold_used}};
  return j;
}

namespace {

FitArtifact parse_artifact(const json& j) {
  if (field<int>(j, "format_version") != kFormatVersion)
    throw ArtifactMismatchError("unsupported artifact format version");
  FitArtifact a;
  Fit& f = a.fit;
  const json& b = j.at("basis");
  SplineConfig config;
  config.degree = field<int>(b, "degree");
  config.num_internal_knots = field<int>(b, "num_internal_knots");
  config.placement = knot_placement_from_string(field<std::string>(b, "knot_placement"));
  const Eigen::VectorXd interior = vec(b.at("interior_knots"));
  if (interior.size() != config.num_internal_knots)
    throw ArtifactMismatchError("interior knot count does not match the basis configuration");
  f.basis = std::make_shared<const Basis>(config, interior);

  f.method = method_from_string(field<std::string>(j, "method"));
  const json& pen = j.at("penalty");
  f.penalty = {field<double>(pen, "lambda1"), field<double>(pen, "lambda2"),
               field<double>(pen, "epsilon_prox")};
  const int p = field<int>(j, "p");
  a.num_observations = field<long>(j, "n");
  a.covariate_names = field<std::vector<std::string>>(j, "covariate_names");
  f.intercept = field<bool>(j, "intercept");
  f.beta0 = field<double>(j, "beta0");
  f.mu = vec(j.at("mu"));
  for (const auto& th : j.at("theta")) f.theta.push_back(vec(th));
  if (f.mu.size() != p || static_cast<int>(f.theta.size()) != p ||
      static_cast<int>(a.covariate_names.size()) != p)
    throw ArtifactMismatchError(fmt::format("artifact coefficients do not match p = {}", p));
  for (const auto& th : f.theta)
    if (th.size() != f.basis->size())
      throw ArtifactMismatchError("theta block length does not match the basis size");
  f.objective_trace = field<std::vector<double>>(j, "objective_trace");
  f.iterations = field<int>(j, "iterations");
  f.converged = field<bool>(j, "converged");
  f.zeroed_in_final_sweep.resize(p);
  for (int k = 0; k < p; ++k) f.zeroed_in_final_sweep[k] = f.theta[k].isZero(0);

  const json& prep = j.at("preprocessing");
  a.time_domain = {field<double>(prep.at("time_domain"), "min"),
                   field<double>(prep.at("time_domain"), "max")};
  auto& pre = a.preprocessing;
  pre.demeaned = field<bool>(prep, "demeaned");
  if (pre.demeaned) {
    pre.subject_means_y = field<std::vector<double>>(prep, "subject_means_y");
    const auto& rows = prep.at("subject_means_x");
    pre.subject_means_x.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i)
      pre.subject_means_x.row(static_cast<Eigen::Index>(i)) = vec(rows[i]).transpose();
  }
  if (!prep.at("standardization").is_null()) {
    const json& s = prep.at("standardization");
    Standardization st;
    st.center = field<std::vector<double>>(s, "center");
    st.scale = field<std::vector<double>>(s, "scale");
    st.exempt = field<std::vector<bool>>(s, "exempt");
    if (static_cast<int>(st.center.size()) != p || static_cast<int>(st.scale.size()) != p)
      throw ArtifactMismatchError("standardization does not match p");
    pre.standardization = std::move(st);
  }

  const json& part = j.at("partition");
  a.partition.s_vary = field<std::vector<int>>(part, "vary");
  a.partition.s_const = field<std::vector<int>>(part, "const");
  a.partition.s_zero = field<std::vector<int>>(part, "zero");
  a.partition.threshold_used = field<double>(part, "threshold");
  return a;
}

}  // namespace

FitArtifact artifact_from_json(const json& j) {
  try {
    return parse_artifact(j);
  } catch (const json::exception& e) {
    throw ArtifactMismatchError(fmt::format("malformed artifact: {}", e.what()));
  }
}

void save_artifact(const std::filesystem::path& path, const FitArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw ParseError(fmt::format("cannot write '{}'", path.string()));
  out << to_json(artifact).dump(2) << '\n';
}

FitArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  try {
    return artifact_from_json(j);
  } catch (const json::exception& e) {
    throw ArtifactMismatchError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void check_compatible(const FitArtifact& artifact, const LongitudinalDataset& dataset) {
  const int p = artifact.fit.num_covariates();
  if (dataset.num_covariates() != p)
    throw ArtifactMismatchError(fmt::format("artifact was fit with {} covariates, data has {}", p,
                                            dataset.num_covariates()));
  for (int k = 0; k < p; ++k)
    if (dataset.covariate_names[k] != artifact.covariate_names[k])
      throw ArtifactMismatchError(fmt::format("covariate {} is '{}' in the data but '{}' in the artifact",
                                              k + 1, dataset.covariate_names[k],
                                              artifact.covariate_names[k]));
}

LongitudinalDataset prepare_for_artifact(LongitudinalDataset dataset, const FitArtifact& artifact) {
  check_compatible(artifact, dataset);
  dataset = rescale_times(std::move(dataset), artifact.time_domain);
  if (artifact.preprocessing.standardization)
    dataset = apply_standardization(std::move(dataset), *artifact.preprocessing.standardization);
  if (artifact.preprocessing.demeaned) dataset = demean_within_subject(std::move(dataset));
  return dataset;
}

}  // namespace tvselect
